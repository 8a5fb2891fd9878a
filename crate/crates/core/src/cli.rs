//! Command-line front end. [`run`] returns the process exit status:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | compatible, or the command succeeded |
//! | 1 | incompatible, or no valid completion exists |
//! | 2 | usage, parse or pattern error |
//! | 3 | the rank and LP criteria disagree |
//! | 4 | completion is not determined by the known entries |

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::Zero;

use crate::compat::{
    check_lp, check_rank, column_marginals, cross_product_check, min_epsilon, recover_joint,
    CrossProductOutcome,
};
use crate::completion::{
    complete_a_and_b_2x3, complete_column_in_a, epsilon_estimates, CompletionResult, Diagnostics,
};
use crate::dsystem::build_d;
use crate::error::Error;
use crate::exact::{format_decimal, parse_rational, RatMatrix, Rational};
use crate::io::{parse_instance, write_instance, Instance};
use crate::model::{derive_conditionals, one_sided_zeros, CompatibilityVerdict, ConditionalMatrix};
use crate::oracle::{perturb_to_incompatible, Generator};

pub const EXIT_COMPATIBLE: i32 = 0;
pub const EXIT_INCOMPATIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DISAGREEMENT: i32 = 3;
pub const EXIT_UNDETERMINED: i32 = 4;

const SUPPORTED_PATTERNS: &str = "supported patterns: \
(1) B fully known and the unknowns of A confined to one column, with at least one other column fully known; \
(2) a 2x3 pair with A unknown at (1,2),(2,2) and B unknown at (1,2),(1,3)";

#[derive(Parser, Debug)]
#[command(
    name = "condcompat",
    version,
    about = "Compatibility of discrete conditional probability matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide compatibility of a fully known pair and recover the joint.
    Check {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Fill the `?` entries so that the pair becomes compatible.
    Complete {
        input: PathBuf,
        /// Take eta from this column of A (1-based) and ignore the others.
        #[arg(long, value_name = "J")]
        force_column: Option<usize>,
        /// Write the completed pair to this file.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Minimal uniform relaxation epsilon* of a fully known pair.
    Epsilon {
        input: PathBuf,
        /// Instead, estimate the two unknowns of a 3x2 A at this epsilon.
        #[arg(long, value_name = "EPS", allow_hyphen_values = true)]
        at: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Write the conditionals A and B of the joint `P` in a file.
    Derive {
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Generate a compatible pair from a seeded random joint.
    Gen {
        seed: u64,
        rows: usize,
        cols: usize,
        /// Move this much mass inside column 1 of A, making the pair incompatible.
        #[arg(long, value_name = "DELTA")]
        perturb: Option<String>,
        /// Also write the generating joint `P`.
        #[arg(long, conflicts_with = "perturb")]
        include_joint: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Rank,
    Lp,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

/// Ordered key/value lines, rendered either for people (`key: value`,
/// decimals alongside fractions) or for scripts (`key=value`).
struct Report {
    machine: bool,
    lines: Vec<String>,
}

impl Report {
    fn new(format: Format) -> Self {
        Self {
            machine: format == Format::Machine,
            lines: Vec::new(),
        }
    }

    fn field(&mut self, key: &str, value: impl Display) {
        if self.machine {
            self.lines.push(format!("{key}={value}"));
        } else {
            self.lines.push(format!("{key}: {value}"));
        }
    }

    fn rational(&mut self, key: &str, r: &Rational) {
        if self.machine {
            self.field(key, r);
        } else {
            self.field(key, format!("{r} ({})", format_decimal(r, 6)));
        }
    }

    fn vector(&mut self, key: &str, v: &[Rational]) {
        let exact: Vec<String> = v.iter().map(ToString::to_string).collect();
        if self.machine {
            self.field(key, exact.join(" "));
        } else {
            let dec: Vec<String> = v.iter().map(|r| format_decimal(r, 6)).collect();
            self.field(key, format!("{} ({})", exact.join(", "), dec.join(", ")));
        }
    }

    fn matrix(&mut self, key: &str, m: &RatMatrix) {
        if self.machine {
            for i in 0..m.rows() {
                self.vector(&format!("{key}.row{}", i + 1), m.row(i));
            }
        } else {
            self.lines.push(format!("{key}:"));
            for i in 0..m.rows() {
                let cells: Vec<String> = m.row(i).iter().map(ToString::to_string).collect();
                self.lines.push(format!("  {}", cells.join(" ")));
            }
        }
    }

    fn emit(&self, out: &mut dyn Write) {
        for line in &self.lines {
            let _ = writeln!(out, "{line}");
        }
    }
}

/// Failure that ends a command with a message on stderr.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InfeasibleFill { .. } | Error::DivisionByZero(_) | Error::SingularSystem => {
                EXIT_INCOMPATIBLE
            }
            _ => EXIT_USAGE,
        };
        let message = match e {
            Error::PatternMismatch(_)
            | Error::NoKnownColumn
            | Error::UnknownsNotConfinedToOneColumn => format!("{e}\n{SUPPORTED_PATTERNS}"),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_COMPATIBLE
            };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Check {
            input,
            method,
            format,
        } => cmd_check(&input, method, format, out),
        Command::Complete {
            input,
            force_column,
            output,
            format,
        } => cmd_complete(&input, force_column, output.as_deref(), format, out),
        Command::Epsilon { input, at, format } => cmd_epsilon(&input, at.as_deref(), format, out),
        Command::Derive { input, output } => cmd_derive(&input, output.as_deref(), out),
        Command::Gen {
            seed,
            rows,
            cols,
            perturb,
            include_joint,
            output,
        } => cmd_gen(
            seed,
            (rows, cols),
            perturb.as_deref(),
            include_joint,
            output.as_deref(),
            out,
        ),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path) -> std::result::Result<Instance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit_file(
    text: &str,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            let _ = write!(out, "{text}");
            Ok(())
        }
    }
}

fn require_pair(
    inst: &Instance,
) -> std::result::Result<(ConditionalMatrix, ConditionalMatrix), Failure> {
    match (&inst.a, &inst.b) {
        (Some(a), Some(b)) => Ok((a.clone(), b.clone())),
        _ => Err(usage("input must contain both A and B")),
    }
}

fn require_known(a: &ConditionalMatrix, b: &ConditionalMatrix) -> std::result::Result<(), Failure> {
    if a.is_fully_known() && b.is_fully_known() {
        Ok(())
    } else {
        Err(usage("input has unknown entries; use `complete`"))
    }
}

fn describe_verdict(
    report: &mut Report,
    verdict: &CompatibilityVerdict,
    b: &ConditionalMatrix,
) -> std::result::Result<(), Failure> {
    report.field("verdict", verdict.label());
    match verdict {
        CompatibilityVerdict::Incompatible { rank } => report.field("rank", rank),
        CompatibilityVerdict::CompatibleUnique { marginals, joint } => {
            report.vector("eta", &marginals.eta);
            report.vector("tau", &marginals.tau);
            report.matrix("joint", joint.cells());
        }
        CompatibilityVerdict::CompatibleNonUnique {
            rank,
            kernel_basis,
            representative,
        } => {
            report.field("rank", rank);
            report.field("kernel_dimension", kernel_basis.len());
            report.vector("eta", representative);
            report.vector("tau", &column_marginals(&b.to_matrix()?, representative));
            report.matrix("joint", recover_joint(b, representative)?.cells());
        }
    }
    Ok(())
}

fn same_verdict(x: &CompatibilityVerdict, y: &CompatibilityVerdict) -> bool {
    use CompatibilityVerdict::*;
    match (x, y) {
        (Incompatible { .. }, Incompatible { .. }) => true,
        (CompatibleUnique { marginals: m1, .. }, CompatibleUnique { marginals: m2, .. }) => {
            m1 == m2
        }
        (CompatibleNonUnique { rank: r1, .. }, CompatibleNonUnique { rank: r2, .. }) => r1 == r2,
        _ => false,
    }
}

fn verdict_code(v: &CompatibilityVerdict) -> i32 {
    if v.is_compatible() {
        EXIT_COMPATIBLE
    } else {
        EXIT_INCOMPATIBLE
    }
}

fn cmd_check(path: &Path, method: Method, format: Format, out: &mut dyn Write) -> Outcome {
    let inst = load(path)?;
    let (a, b) = require_pair(&inst)?;
    require_known(&a, &b)?;
    let mut report = Report::new(format);
    let rank = build_d(&a, &b)?.d.rank();
    report.field("dims", format!("{} {}", inst.dims.0, inst.dims.1));
    report.field("rank_d", rank);
    for (i, j) in one_sided_zeros(&a, &b) {
        report.field(
            "warning",
            format!("exactly one of a, b is zero at ({}, {})", i + 1, j + 1),
        );
    }
    match cross_product_check(&a, &b)? {
        CrossProductOutcome::Agree => report.field("cross_product", "agree"),
        CrossProductOutcome::Disagree(m) => report.field(
            "cross_product",
            format!(
                "disagree rows {} {} columns {} {}",
                m.rows.0 + 1,
                m.rows.1 + 1,
                m.cols.0 + 1,
                m.cols.1 + 1
            ),
        ),
        CrossProductOutcome::Inapplicable(_) => report.field("cross_product", "inapplicable"),
    }

    let verdicts: Vec<(&str, CompatibilityVerdict)> = match method {
        Method::Rank => vec![("rank", check_rank(&a, &b)?)],
        Method::Lp => vec![("lp", check_lp(&a, &b)?)],
        Method::Both => vec![("rank", check_rank(&a, &b)?), ("lp", check_lp(&a, &b)?)],
    };
    if let [(_, x), (_, y)] = verdicts.as_slice() {
        if !same_verdict(x, y) {
            report.field("method", "both");
            report.field("verdict", "disagreement");
            for (name, v) in &verdicts {
                let mut trace = Report::new(format);
                describe_verdict(&mut trace, v, &b)?;
                for line in trace.lines {
                    report.lines.push(format!("{name}.{line}"));
                }
            }
            report.emit(out);
            return Ok(EXIT_DISAGREEMENT);
        }
    }
    let (name, verdict) = &verdicts[0];
    report.field("method", if verdicts.len() == 2 { "both" } else { name });
    describe_verdict(&mut report, verdict, &b)?;
    report.emit(out);
    Ok(verdict_code(verdict))
}

fn report_filled(
    report: &mut Report,
    label: &str,
    before: &ConditionalMatrix,
    after: &ConditionalMatrix,
) {
    for (i, j) in before.unknown_positions() {
        if let Some(v) = after.get(i, j) {
            report.rational(&format!("{label}({},{})", i + 1, j + 1), v);
        }
    }
}

fn cmd_complete(
    path: &Path,
    force_column: Option<usize>,
    output: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
) -> Outcome {
    let inst = load(path)?;
    let (a, b) = require_pair(&inst)?;
    if a.is_fully_known() && b.is_fully_known() {
        return Err(usage(format!(
            "no unknown entries to complete\n{SUPPORTED_PATTERNS}"
        )));
    }
    let force = match force_column {
        Some(0) => return Err(usage("--force-column is 1-based")),
        Some(j) => Some(j - 1),
        None => None,
    };
    let result: CompletionResult = if b.is_fully_known() {
        complete_column_in_a(&a, &b, force)?
    } else {
        if force.is_some() {
            return Err(usage("--force-column applies only when B is fully known"));
        }
        complete_a_and_b_2x3(&a, &b)?
    };

    let mut report = Report::new(format);
    let code = match &result.diagnostics {
        Diagnostics::ExactUnique => {
            report.field("diagnostics", "exact_unique");
            EXIT_COMPATIBLE
        }
        Diagnostics::Forced { column } => {
            report.field("diagnostics", format!("forced_column {}", column + 1));
            EXIT_COMPATIBLE
        }
        Diagnostics::KnownColumnsInconsistent { candidates } => {
            report.field("diagnostics", "known_columns_inconsistent");
            for c in candidates {
                let key = format!("column{}.eta", c.column + 1);
                match &c.eta {
                    Some(eta) => report.vector(&key, eta),
                    None => report.field(&key, "none"),
                }
            }
            EXIT_UNDETERMINED
        }
        Diagnostics::Underdetermined { free_parameters } => {
            report.field("diagnostics", "underdetermined");
            report.field("free_parameters", free_parameters);
            EXIT_UNDETERMINED
        }
    };
    if code != EXIT_COMPATIBLE {
        report.emit(out);
        return Ok(code);
    }
    report_filled(&mut report, "A", &a, &result.filled_a);
    report_filled(&mut report, "B", &b, &result.filled_b);
    if let Some(eta) = &result.eta {
        report.vector("eta", eta);
    }
    let verdict = check_rank(&result.filled_a, &result.filled_b)?;
    report.field("completed_verdict", verdict.label());
    report.emit(out);
    if let Some(p) = output {
        let mut filled = Instance::pair(result.filled_a, result.filled_b);
        filled.name = inst.name;
        filled.seed = inst.seed;
        emit_file(&write_instance(&filled), Some(p), out)?;
    }
    Ok(code)
}

fn cmd_epsilon(path: &Path, at: Option<&str>, format: Format, out: &mut dyn Write) -> Outcome {
    let inst = load(path)?;
    let (a, b) = require_pair(&inst)?;
    if inst.dims.0 < 2 || inst.dims.1 < 2 {
        return Err(usage(format!(
            "epsilon needs at least 2x2 matrices, got {}x{}",
            inst.dims.0, inst.dims.1
        )));
    }
    let mut report = Report::new(format);
    if let Some(text) = at {
        let eps = parse_rational(text).map_err(|m| usage(format!("--at: {m}")))?;
        let est = epsilon_estimates(&a, &b, &eps)?;
        report.rational("epsilon", &eps);
        report.vector("eta", &est.eta);
        report.rational("A(1,2)", &est.alpha.0);
        report.rational("A(2,2)", &est.alpha.1);
        report.field("feasible", est.feasible);
        report.emit(out);
        return Ok(EXIT_COMPATIBLE);
    }
    require_known(&a, &b)?;
    let res = min_epsilon(&a, &b)?;
    report.rational("epsilon_star", &res.epsilon_star);
    report.vector("eta", &res.eta);
    report.field("compatible", res.epsilon_star.is_zero());
    report.emit(out);
    Ok(EXIT_COMPATIBLE)
}

fn cmd_derive(path: &Path, output: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let inst = load(path)?;
    let joint = inst
        .joint
        .ok_or_else(|| usage("input must contain a joint `P`"))?;
    let (a, b) = derive_conditionals(&joint)?;
    let mut derived = Instance::pair(a, b);
    derived.name = inst.name;
    derived.seed = inst.seed;
    emit_file(&write_instance(&derived), output, out)?;
    Ok(EXIT_COMPATIBLE)
}

fn cmd_gen(
    seed: u64,
    dims: (usize, usize),
    perturb: Option<&str>,
    include_joint: bool,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    if dims.0 < 2 || dims.1 < 2 {
        return Err(usage(format!(
            "gen needs at least 2x2, got {}x{}",
            dims.0, dims.1
        )));
    }
    let joint = Generator::new(seed, dims).random_joint()?;
    let (mut a, mut b) = derive_conditionals(&joint)?;
    if let Some(text) = perturb {
        let delta = parse_rational(text).map_err(|m| usage(format!("--perturb: {m}")))?;
        (a, b) = perturb_to_incompatible(&a, &b, &delta)?;
    }
    let mut inst = Instance::pair(a, b);
    inst.seed = Some(seed);
    inst.name = Some(match perturb {
        Some(d) => format!("seed {seed} {}x{} perturbed by {d}", dims.0, dims.1),
        None => format!("seed {seed} {}x{}", dims.0, dims.1),
    });
    if include_joint {
        inst.joint = Some(joint);
    }
    emit_file(&write_instance(&inst), output, out)?;
    Ok(EXIT_COMPATIBLE)
}
