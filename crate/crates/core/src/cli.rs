//! Command-line front end.
//!
//! Every subcommand is a thin adapter over one library call. JSON output has
//! alphabetically ordered keys and spells non-finite numbers as `"inf"`,
//! `"-inf"` or `"nan"`; CSV output prints numbers with 17 significant digits.
//!
//! Exit codes: 0 on success, 2 for usage and validation errors, 1 for
//! numeric and I/O failures.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::classifier::{classify, sweep_onesided_rx1};
use crate::error::Error;
use crate::lowpower::certify;
use crate::model::{ChannelParams, SchemeParams};
use crate::montecarlo::simulate;
use crate::regions::{excess_rate, sample_boundary, RegionKind};
use crate::search::{search_enlargement, SearchBudget, SearchOutcome};
use crate::zf_scheme::{bootstrap_rates, derive, scheme_rates};

#[derive(Debug, Parser)]
#[command(
    name = "gbc-feedback",
    version,
    about = "Gaussian broadcast channel with noisy feedback: capacity regions, enlargement tests and feedback schemes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether feedback enlarges the capacity region.
    Classify {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sample a capacity-region frontier (CSV by default).
    Boundary {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, value_enum, default_value = "nofb")]
        kind: KindArg,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Closed-form quantities and rates of the zero-forcing scheme.
    Scheme {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        knobs: SchemeArgs,
        /// Run the scheme at this power and give the rest to receiver 2.
        #[arg(long, value_parser = parse_finite)]
        epsilon: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Low-power enlargement certificate.
    CertifyLowpower {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Search for a rate pair outside the no-feedback region.
    Search {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 40)]
        max_halvings: u32,
        #[arg(long, default_value_t = 5)]
        multistarts: usize,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Symbol-level simulation of the scheme.
    Simulate {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        knobs: SchemeArgs,
        #[arg(long, default_value_t = 100_000)]
        blocks: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Regime map for feedback from receiver 1 only (CSV by default).
    Sweep {
        #[arg(long, default_value_t = 0.0, value_parser = parse_finite)]
        x_min: f64,
        #[arg(long, value_parser = parse_finite)]
        x_max: f64,
        #[arg(long, default_value_t = 0.0, value_parser = parse_finite)]
        y_min: f64,
        #[arg(long, value_parser = parse_finite)]
        y_max: f64,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
struct ChannelArgs {
    /// JSON file with the channel parameters; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_finite, allow_negative_numbers = true)]
    sigma1_sq: Option<f64>,
    #[arg(long, value_parser = parse_finite, allow_negative_numbers = true)]
    sigma2_sq: Option<f64>,
    /// Feedback noise variance of receiver 1, or "inf" for no feedback.
    #[arg(long, value_parser = parse_feedback, allow_negative_numbers = true)]
    sigma_fb1_sq: Option<f64>,
    /// Feedback noise variance of receiver 2, or "inf" for no feedback.
    #[arg(long, value_parser = parse_feedback, allow_negative_numbers = true)]
    sigma_fb2_sq: Option<f64>,
    #[arg(long, value_parser = parse_finite, allow_negative_numbers = true)]
    power: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct SchemeArgs {
    #[arg(long, value_parser = parse_finite, allow_negative_numbers = true)]
    theta_prime: f64,
    #[arg(long, default_value_t = 0.0, value_parser = parse_finite, allow_negative_numbers = true)]
    gamma1: f64,
    #[arg(long, default_value_t = 0.0, value_parser = parse_finite, allow_negative_numbers = true)]
    gamma2: f64,
}

impl SchemeArgs {
    fn scheme(&self) -> SchemeParams {
        SchemeParams {
            theta_prime: self.theta_prime,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the payload to this file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Nofb,
    Weakfb,
}

fn parse_finite(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` must be a finite number"))
    }
}

/// Finite numbers or `inf` in any letter case; no other infinity spelling.
fn parse_feedback(s: &str) -> std::result::Result<f64, String> {
    if s.trim().eq_ignore_ascii_case("inf") {
        Ok(f64::INFINITY)
    } else {
        parse_finite(s).map_err(|_| format!("`{s}` is neither a finite number nor \"inf\""))
    }
}

/// Failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NegativeEffectiveVariance { .. } => Failure::internal(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

/// Parses `args` (program name first) and runs the command. Payloads go to
/// `stdout` (or `--output`), diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match command {
        Command::Classify { channel, output } => {
            let p = channel.resolve()?;
            let c = classify(&p)?;
            let payload = object([("margin", num(c.margin)), ("verdict", json!(c.verdict.as_str()))]);
            emit_json(&output, payload, stdout)
        }
        Command::Boundary {
            channel,
            kind,
            samples,
            output,
        } => {
            let p = channel.resolve()?;
            let kind = match kind {
                KindArg::Nofb => RegionKind::NoFeedback,
                KindArg::Weakfb => RegionKind::WeakFeedback,
            };
            let points = sample_boundary(&p, kind, samples)?;
            match output.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut text = String::from("theta,r1_bits,r2_bits\n");
                    for s in &points {
                        text.push_str(&format!("{},{},{}\n", fmt_g17(s.theta), fmt_g17(s.rates.r1), fmt_g17(s.rates.r2)));
                    }
                    write_payload(&output, &text, stdout)
                }
                Format::Json => {
                    let rows = points
                        .iter()
                        .map(|s| object([("r1_bits", num(s.rates.r1)), ("r2_bits", num(s.rates.r2)), ("theta", num(s.theta))]))
                        .collect();
                    let kind = match kind {
                        RegionKind::NoFeedback => "nofb",
                        RegionKind::WeakFeedback => "weakfb",
                    };
                    emit_json(&output, object([("kind", json!(kind)), ("samples", Value::Array(rows))]), stdout)
                }
            }
        }
        Command::Scheme {
            channel,
            knobs,
            epsilon,
            output,
        } => {
            let p = channel.resolve()?;
            let scheme = knobs.scheme();
            let (rates, d) = match epsilon {
                None => (scheme_rates(&p, &scheme)?, derive(&p, &scheme)?),
                Some(eps) => (bootstrap_rates(&p, eps, &scheme)?, derive(&p.with_power(eps), &scheme)?),
            };
            let excess = excess_rate(&p, rates)?.value();
            let mut fields = vec![
                ("alpha", num(d.alpha)),
                ("beta1", num(d.beta1)),
                ("beta2", num(d.beta2)),
                ("eff_var1", num(d.eff_var1)),
                ("eff_var2", num(d.eff_var2)),
                ("excess_rate", num(excess)),
                ("hat_sigma1_sq", num(d.hat_sigma1_sq)),
                ("hat_sigma2_sq", num(d.hat_sigma2_sq)),
                ("r1_bits", num(rates.r1)),
                ("r2_bits", num(rates.r2)),
            ];
            if let Some(eps) = epsilon {
                fields.push(("epsilon", num(eps)));
            }
            emit_json(&output, object(fields), stdout)
        }
        Command::CertifyLowpower { channel, output } => {
            let p = channel.resolve()?;
            let c = certify(&p)?;
            let payload = object([
                ("a1", num(c.a1)),
                ("a2", num(c.a2)),
                ("feasible", json!(c.feasible)),
                ("g_at_xstar", num(c.g_at_xstar)),
                ("mu", num(c.mu)),
                ("theta", num(c.theta)),
                ("x_star", num(c.x_star)),
            ]);
            emit_json(&output, payload, stdout)
        }
        Command::Search {
            channel,
            max_halvings,
            multistarts,
            max_iters,
            output,
        } => {
            let p = channel.resolve()?;
            let budget = SearchBudget {
                max_halvings,
                multistarts,
                max_iters,
            };
            let payload = match search_enlargement(&p, &budget)? {
                SearchOutcome::Found(w) => object([
                    ("epsilon", num(w.epsilon)),
                    ("excess", num(w.excess)),
                    ("excess_bound", num(w.excess_bound)),
                    ("found", json!(true)),
                    ("gamma1", num(w.scheme.gamma1)),
                    ("gamma2", num(w.scheme.gamma2)),
                    ("r1_bits", num(w.rates.r1)),
                    ("r2_bits", num(w.rates.r2)),
                    ("swapped", json!(w.swapped)),
                    ("theta_prime", num(w.scheme.theta_prime)),
                ]),
                SearchOutcome::NotFound { best_excess } => {
                    object([("best_excess", num(best_excess)), ("found", json!(false))])
                }
            };
            emit_json(&output, payload, stdout)
        }
        Command::Simulate {
            channel,
            knobs,
            blocks,
            seed,
            output,
        } => {
            let p = channel.resolve()?;
            let r = simulate(&p, &knobs.scheme(), blocks, seed)?;
            let payload = object([
                ("emp_cross1", num(r.emp_cross1)),
                ("emp_cross2", num(r.emp_cross2)),
                ("emp_leak1", num(r.emp_leak1)),
                ("emp_leak2", num(r.emp_leak2)),
                ("emp_power_even", num(r.emp_power_even)),
                ("emp_power_odd", num(r.emp_power_odd)),
                ("emp_var_s1", num(r.emp_var_s1)),
                ("emp_var_s2", num(r.emp_var_s2)),
                ("n_blocks", json!(r.n_blocks)),
                ("seed", json!(r.seed)),
            ]);
            emit_json(&output, payload, stdout)
        }
        Command::Sweep {
            x_min,
            x_max,
            y_min,
            y_max,
            resolution,
            output,
        } => {
            let grid = sweep_onesided_rx1((x_min, x_max), (y_min, y_max), resolution)?;
            match output.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut text = String::from("x,y,verdict,margin\n");
                    for (x, y, c) in grid.cells() {
                        text.push_str(&format!(
                            "{},{},{},{}\n",
                            fmt_g17(x),
                            fmt_g17(y),
                            c.verdict.as_str(),
                            fmt_g17(c.margin)
                        ));
                    }
                    write_payload(&output, &text, stdout)
                }
                Format::Json => {
                    let cells = grid
                        .cells()
                        .map(|(x, y, c)| {
                            object([("margin", num(c.margin)), ("verdict", json!(c.verdict.as_str())), ("x", num(x)), ("y", num(y))])
                        })
                        .collect();
                    emit_json(&output, object([("cells", Value::Array(cells)), ("resolution", json!(resolution))]), stdout)
                }
            }
        }
    }
}

impl ChannelArgs {
    /// Config file first, then individual flags on top.
    fn resolve(&self) -> std::result::Result<ChannelParams, Failure> {
        let base: Option<ChannelParams> = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
                Some(
                    serde_json::from_str(&text)
                        .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?,
                )
            }
            None => None,
        };
        let pick = |flag: Option<f64>, from_base: Option<f64>, name: &str| {
            flag.or(from_base)
                .ok_or_else(|| Failure::usage(format!("missing --{name} (or a --config file)")))
        };
        let params = ChannelParams {
            sigma1_sq: pick(self.sigma1_sq, base.map(|b| b.sigma1_sq), "sigma1-sq")?,
            sigma2_sq: pick(self.sigma2_sq, base.map(|b| b.sigma2_sq), "sigma2-sq")?,
            sigma_fb1_sq: pick(self.sigma_fb1_sq, base.map(|b| b.sigma_fb1_sq), "sigma-fb1-sq")?,
            sigma_fb2_sq: pick(self.sigma_fb2_sq, base.map(|b| b.sigma_fb2_sq), "sigma-fb2-sq")?,
            power: pick(self.power, base.map(|b| b.power), "power")?,
        };
        Ok(crate::model::validate(params)?)
    }
}

fn object(fields: impl IntoIterator<Item = (&'static str, Value)>) -> Value {
    let map: Map<String, Value> = fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Value::Object(map)
}

/// JSON number, or a string sentinel for values JSON cannot represent.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn emit_json(output: &OutputArgs, payload: Value, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    if output.format == Some(Format::Csv) {
        return Err(Failure::usage("this command only supports --format json"));
    }
    write_payload(output, &format!("{payload}\n"), stdout)
}

fn write_payload(output: &OutputArgs, text: &str, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match &output.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::internal(format!("cannot write output: {e}"))),
    }
}

/// `%.17g`: 17 significant digits, trailing zeros dropped, exponent form
/// outside `[1e-4, 1e17)`.
pub fn fmt_g17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (16 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["gbc-feedback"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn g17_formatting() {
        assert_eq!(fmt_g17(0.25), "0.25");
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(-3.0), "-3");
        assert_eq!(fmt_g17(1e-20), "9.9999999999999995e-21");
        assert_eq!(fmt_g17(0.5f64.powi(20)), "9.5367431640625e-07");
        assert_eq!(fmt_g17(1.5e300), "1.5000000000000001e+300");
        assert_eq!(fmt_g17(123456.0), "123456");
        assert_eq!(fmt_g17(0.0), "0");
        assert_eq!(fmt_g17(f64::NEG_INFINITY), "-inf");
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-7, 6.02214076e23, 5e-324] {
            assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn feedback_parser() {
        assert_eq!(parse_feedback("inf"), Ok(f64::INFINITY));
        assert_eq!(parse_feedback("INF"), Ok(f64::INFINITY));
        assert_eq!(parse_feedback("2.5"), Ok(2.5));
        assert!(parse_feedback("infinity").is_err());
        assert!(parse_feedback("NaN").is_err());
        assert!(parse_finite("inf").is_err());
    }

    #[test]
    fn classify_example() {
        let (code, out, _) = run_str(&[
            "classify", "--sigma1-sq", "1", "--sigma2-sq", "4", "--sigma-fb1-sq", "inf", "--sigma-fb2-sq", "inf",
            "--power", "1",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out, "{\"margin\":-3.0,\"verdict\":\"unchanged\"}\n");
    }

    #[test]
    fn usage_errors_exit_two() {
        let (code, _, err) = run_str(&["classify", "--sigma1-sq", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("missing --sigma2-sq"), "{err}");
        let (code, _, _) = run_str(&["frobnicate"]);
        assert_eq!(code, 2);
        let (code, _, _) = run_str(&[
            "classify", "--sigma1-sq", "-1", "--sigma2-sq", "4", "--sigma-fb1-sq", "inf", "--sigma-fb2-sq", "inf",
            "--power", "1",
        ]);
        assert_eq!(code, 2);
    }
}
