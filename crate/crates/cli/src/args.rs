use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const SCHEMA_NOTE: &str = "JSON output carries \"schema_version\": 1. CSV output always starts with a header row.";

#[derive(Debug, Parser)]
#[command(
    name = "airykdv",
    version,
    about = "Deformed Airy-kernel Fredholm determinants, the KdV solution u and the eigenfunction phi",
    after_help = "Exit codes: 0 success, 1 tolerance failure, 2 configuration error, 3 numerical failure.\n\
                  Sigma JSON: {\"type\": \"step\"|\"kpz\"|\"fermi\"|\"piecewise\"|\"tanh\", \"gamma\", \"theta\", \"steps\": [[loc, level], ...]}"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Weight sigma as inline JSON or @path to a JSON file [default: step with --gamma]
    #[arg(long, global = true, value_name = "JSON|@FILE")]
    pub sigma: Option<String>,
    /// Step height for tw, p2 and the default sigma
    #[arg(long, global = true, default_value_t = 1.0)]
    pub gamma: f64,
    /// Width of the Painleve II strip in units of t^(1/3)
    #[arg(long = "M", global = true, default_value_t = airykdv_core::asymptotics::DEFAULT_M)]
    pub m: f64,
    /// Right edge of the profile regime
    #[arg(long = "K", global = true, default_value_t = airykdv_core::asymptotics::DEFAULT_K)]
    pub k: f64,
    /// Uniform subdivision of every quadrature panel
    #[arg(long, global = true)]
    pub panels: Option<usize>,
    /// Gauss-Legendre nodes per panel
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// Override the pass tolerance of check and tail-constant
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true, env = "AIRYKDV_THREADS")]
    pub threads: Option<usize>,
    /// Write output to a file instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format [default depends on the command]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long = "x-from", global = true, allow_hyphen_values = true)]
    pub x_from: Option<f64>,
    #[arg(long = "x-to", global = true, allow_hyphen_values = true)]
    pub x_to: Option<f64>,
    #[arg(long = "x-step", global = true)]
    pub x_step: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long = "t-from", global = true, allow_hyphen_values = true)]
    pub t_from: Option<f64>,
    #[arg(long = "t-to", global = true, allow_hyphen_values = true)]
    pub t_to: Option<f64>,
    #[arg(long = "t-step", global = true)]
    pub t_step: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub s: Option<f64>,
    #[arg(long = "s-from", global = true, allow_hyphen_values = true)]
    pub s_from: Option<f64>,
    #[arg(long = "s-to", global = true, allow_hyphen_values = true)]
    pub s_to: Option<f64>,
    #[arg(long = "s-step", alias = "step", global = true)]
    pub s_step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    Kdv,
    Schrodinger,
    Idpii,
    Evolution,
    Mkdv,
    PhiIdentity,
    Cylkdv,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Linear,
    Cubic,
    StepControl,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// log Q, Q, u, p and the integral of phi^2 against d sigma at one (x, t) [default format: json]
    #[command(after_help = det_columns())]
    Det,
    /// Grid of (x, t) points compared with the small-t regime formulas [default format: csv]
    #[command(after_help = scan_columns())]
    Scan,
    /// Residuals of the exact identities as JSON lines of reports [default format: json]
    #[command(after_help = check_columns())]
    Check {
        #[arg(value_enum)]
        kind: CheckArg,
    },
    /// Tracy-Widom distribution F(s; gamma) [default format: csv]
    #[command(after_help = tw_columns())]
    Tw,
    /// y^2 for Painleve II from the boundary value solver and from the determinant [default format: csv]
    #[command(after_help = p2_columns())]
    P2,
    /// Constant in the large-gap expansion of log F(-s) [default format: json]
    #[command(after_help = tail_columns())]
    TailConstant,
    /// KPZ Laplace transform Q_kpz(s T^(-1/6), T^(-1/2)) and its deep-tail formula; --t sets T [default format: csv]
    #[command(after_help = kpz_columns())]
    Kpz,
    /// Limiting profile v(x) = lim u(x, t) estimated from a t ladder [default format: json]
    #[command(after_help = v_columns())]
    VEstimate {
        /// Correction model fitted across the t samples
        #[arg(long, value_enum, default_value_t = ModelArg::StepControl)]
        model: ModelArg,
    },
}

macro_rules! columns_help {
    ($name:ident, $body:expr) => {
        fn $name() -> String {
            format!("Columns:\n{}\n\n{}", $body, SCHEMA_NOTE)
        }
    };
}

columns_help!(
    det_columns,
    "  x, t        evaluation point\n  \
     log_q       log det(1 - K)\n  \
     q           det(1 - K)\n  \
     u           d2/dx2 log Q + x/2t by finite differences\n  \
     p           d/dx log Q + x^2/4t by finite differences\n  \
     phi_sq_int  integral of phi^2 against d sigma\n  \
     u_trace     u from exact derivatives of the discrete determinant\n  \
     p_trace     p from exact derivatives of the discrete determinant\n  \
     nodes       quadrature nodes of the operator"
);
columns_help!(
    scan_columns,
    "  x, t        grid point; rows are x-major (t varies fastest)\n  \
     log_q       log det(1 - K)\n  \
     u           d2/dx2 log Q + x/2t by finite differences, as in det\n  \
     regime      i, ii, iii or outside, from --M and --K\n  \
     asym_value  u from the regime formula (empty outside)\n  \
     gap         u - asym_value"
);
columns_help!(
    check_columns,
    "  name        identity checked\n  \
     x, t        evaluation point\n  \
     z           eigenfunction sample point (empty when unused)\n  \
     raw         residual\n  \
     scale       largest term of the identity\n  \
     normalized  raw / scale\n  \
     tolerance   pass threshold (--tol overrides)\n  \
     pass        true when normalized <= tolerance\n\
     JSON lines carry name, raw, scale, normalized and meta."
);
columns_help!(tw_columns, "  s     argument\n  F_TW  det(1 - gamma K_Ai) on (s, inf)");
columns_help!(
    p2_columns,
    "  s         argument\n  \
     y_sq_bvp  y^2 from the boundary value solver (gamma = 1 only)\n  \
     y_sq_det  y^2 from second differences of log F\n  \
     gap       y_sq_bvp - y_sq_det"
);
columns_help!(
    tail_columns,
    "  s1, s2        gaps used (--s-from, --s-to; default 6 and 8)\n  \
     raw1, raw2    log F(-s) + s^3/12 + log(s)/8 at each gap\n  \
     extrapolated  Richardson value\n  \
     reference     log(2)/24 + zeta'(-1)\n  \
     error         |extrapolated - reference|\n  \
     pass          error <= tolerance (default 2e-2)"
);
columns_help!(
    kpz_columns,
    "  s, T       Laplace variable and KPZ time\n  \
     x, t       determinant arguments s T^(-1/6) and T^(-1/2)\n  \
     log_q, q   log Q_kpz and Q_kpz\n  \
     deep_tail  -t^-4 phi(x t) - sqrt(1 + pi^2 x t)/6 (empty when undefined)\n  \
     gap        log_q - deep_tail"
);
columns_help!(
    v_columns,
    "  x               position\n  \
     v_hat           extrapolated limit of u(x, t)\n  \
     model_residual  relative misfit of the fit\n  \
     v_small_x       1/(8x^2) + (1/2) integral of (chi - sigma)\n\
     t samples default to 8e-3 x^3 and 4e-3 x^3; a --t range overrides them."
);
