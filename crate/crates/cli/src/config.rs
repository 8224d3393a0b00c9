use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rotorspec::basis::Sector;
use rotorspec::hamiltonian::FieldConfig;
use rotorspec::molecule::{resolve_molecule, MoleculeSpec, RotorClass};
use rotorspec::solver::{Method, SolverOptions, DEFAULT_DEG_TOL, DEFAULT_SEED, DEFAULT_TOL};
use rotorspec::sweeps::{default_grid, grid, FixedParams, KappaFamily, SweepMode, SweepPlan, System};

#[derive(Debug, Parser)]
#[command(name = "rotorspec", version, about = "Spectra and dipole polarisation of interacting polar rigid rotors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest states at one parameter point.
    Spectrum(Opts),
    /// Sweep the separation r / r_B.
    SweepR(Opts),
    /// Sweep the field angle θ from the intermolecular axis, in degrees.
    SweepTheta(Opts),
    /// Sweep the field magnitude ε for a pair.
    SweepField(Opts),
    /// Sweep the asymmetry parameter κ at fixed A and C.
    SweepKappa(Opts),
    /// Single-molecule energies and dipoles versus ε.
    Stark(Opts),
    /// Repeat one solve over a range of j_max.
    Convergence(Opts),
    /// Write the assembled Hamiltonian in coordinate format.
    DumpMatrix(Opts),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Args)]
pub struct Opts {
    /// Built-in name or molecule file; give twice for two different molecules.
    #[arg(long, value_name = "NAME|FILE")]
    pub molecule: Vec<String>,
    /// Treat a single molecule instead of a pair.
    #[arg(long)]
    pub single: bool,
    /// Basis cutoff (default 7 for linear rotors, 5 otherwise).
    #[arg(long)]
    pub jmax: Option<u32>,
    /// Separation in units of r_B.
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// Field magnitude ε = dE/B.
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    /// Field angle from the Z axis, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Sweep grid `start:stop:count[:log]`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 40)]
    pub n_states: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_DEG_TOL)]
    pub deg_tol: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    /// Restrict the pair basis, e.g. `m=0`, `k=1` or `m=0/k=1`.
    #[arg(long, allow_hyphen_values = true)]
    pub sector: Option<String>,
    /// Solve the whole basis at once instead of per conserved sector.
    #[arg(long)]
    pub no_blocking: bool,
    /// A in GHz for sweep-kappa.
    #[arg(long, default_value_t = 2.0)]
    pub kappa_a: f64,
    /// C in GHz for sweep-kappa.
    #[arg(long, default_value_t = 1.0)]
    pub kappa_c: f64,
    /// Body-frame dipole `d_a,d_b,d_c` in Debye for sweep-kappa.
    #[arg(long, default_value = "1,0,0", allow_hyphen_values = true)]
    pub kappa_dipole: String,
    /// Output file; CSV goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Append GHz and SI parameter columns.
    #[arg(long)]
    pub si: bool,
    /// Worker threads.
    #[arg(long, env = "ROTORSPEC_THREADS")]
    pub threads: Option<usize>,
}

/// Validation failure naming the offending flag.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError {
    pub flag: &'static str,
    pub msg: String,
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.flag, self.msg)
    }
}

impl std::error::Error for UsageError {}

fn usage(flag: &'static str, msg: impl std::fmt::Display) -> UsageError {
    UsageError { flag, msg: msg.to_string() }
}

#[derive(Debug, Clone)]
pub enum Job {
    Sweep(SweepPlan),
    Convergence { fixed: FixedParams, j_max: Vec<u32> },
    DumpMatrix(FixedParams),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub job: Job,
    pub molecules: Vec<String>,
    pub out: Option<PathBuf>,
    pub si: bool,
    pub threads: Option<usize>,
}

pub fn parse_sector(s: &str) -> Result<Sector, String> {
    let mut sector = Sector::NONE;
    for part in s.split('/') {
        let (key, value) = part.split_once('=').ok_or_else(|| format!("expected m=<int> or k=<int>, got '{part}'"))?;
        let v: i32 = value.trim().parse().map_err(|_| format!("'{value}' is not an integer"))?;
        match key.trim() {
            "m" if sector.m_total.is_none() => sector.m_total = Some(v),
            "k" if sector.k_total.is_none() => sector.k_total = Some(v),
            other => return Err(format!("unexpected or repeated key '{other}'")),
        }
    }
    Ok(sector)
}

/// Parse `start:stop:count[:log]`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(format!("expected start:stop:count[:log], got '{s}'"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("'{p}' is not a number"));
    let (start, stop) = (num(parts[0])?, num(parts[1])?);
    let count: usize = parts[2].trim().parse().map_err(|_| format!("count '{}' is not a positive integer", parts[2]))?;
    let log = match parts.get(3).map(|p| p.trim()) {
        None => false,
        Some("log") => true,
        Some(other) => return Err(format!("unknown grid spacing '{other}' (only 'log')")),
    };
    if count >= 2 && start == stop {
        return Err("grid endpoints coincide; the grid must be strictly monotone".into());
    }
    if count >= 2 && start > stop {
        return Err(format!("non-monotone grid: start {start} > stop {stop}; sweeps run from start upwards"));
    }
    grid(start, stop, count, log).map_err(|e| e.to_string())
}

fn parse_dipole(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("'{p}' is not a number")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected three comma-separated components".to_string())
}

fn default_jmax(class: RotorClass) -> u32 {
    if class == RotorClass::Linear {
        7
    } else {
        5
    }
}

fn forbid(cond: bool, flag: &'static str, why: &str) -> Result<(), UsageError> {
    if cond {
        Err(usage(flag, why))
    } else {
        Ok(())
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::SweepR(_) => "sweep-r",
            Command::SweepTheta(_) => "sweep-theta",
            Command::SweepField(_) => "sweep-field",
            Command::SweepKappa(_) => "sweep-kappa",
            Command::Stark(_) => "stark",
            Command::Convergence(_) => "convergence",
            Command::DumpMatrix(_) => "dump-matrix",
        }
    }

    pub fn opts(&self) -> &Opts {
        match self {
            Command::Spectrum(o)
            | Command::SweepR(o)
            | Command::SweepTheta(o)
            | Command::SweepField(o)
            | Command::SweepKappa(o)
            | Command::Stark(o)
            | Command::Convergence(o)
            | Command::DumpMatrix(o) => o,
        }
    }
}

/// Turn parsed arguments into a fully validated configuration.
pub fn build(command: &Command) -> Result<RunConfig, UsageError> {
    let o = command.opts();
    let name = command.name();
    let is = |n: &str| name == n;

    forbid(is("sweep-r") && o.r.is_some(), "--r", "conflicts with sweep-r, which sweeps r")?;
    forbid(is("sweep-theta") && o.theta.is_some(), "--theta", "conflicts with sweep-theta, which sweeps θ")?;
    forbid((is("sweep-field") || is("stark")) && o.eps.is_some(), "--eps", "conflicts with a field-magnitude sweep")?;
    forbid((is("spectrum") || is("dump-matrix")) && o.grid.is_some(), "--grid", "only sweeps and convergence take a grid")?;
    forbid(is("convergence") && o.jmax.is_some(), "--jmax", "convergence sweeps j_max; give the range with --grid")?;
    forbid(is("sweep-kappa") && !o.molecule.is_empty(), "--molecule", "sweep-kappa builds its molecules from --kappa-a/--kappa-c")?;
    forbid(o.molecule.len() > 2, "--molecule", "at most two molecules")?;
    forbid(o.single && o.molecule.len() == 2, "--single", "two molecules were given")?;
    forbid((is("sweep-r") || is("sweep-field")) && o.single, "--single", "this sweep needs a pair")?;
    forbid(is("stark") && o.molecule.len() == 2, "--molecule", "stark takes one molecule")?;
    forbid(o.n_states == 0, "--n-states", "must be at least 1")?;
    forbid(!(o.tol > 0.0 && o.tol.is_finite()), "--tol", "must be positive")?;
    forbid(!(o.deg_tol >= 0.0 && o.deg_tol.is_finite()), "--deg-tol", "must be non-negative")?;
    forbid(o.threads == Some(0), "--threads", "must be at least 1")?;
    forbid(is("convergence") && o.si, "--si", "convergence tables carry no SI columns")?;
    if let Some(r) = o.r {
        forbid(!(r > 0.0 && r.is_finite()), "--r", "must be positive and finite")?;
    }

    let single = o.single || is("stark");
    let selectors: Vec<String> = if o.molecule.is_empty() { vec!["linear".to_string()] } else { o.molecule.clone() };
    let specs: Vec<MoleculeSpec> = if is("sweep-kappa") {
        Vec::new()
    } else {
        selectors.iter().map(|s| resolve_molecule(s).map_err(|e| usage("--molecule", e))).collect::<Result<_, _>>()?
    };

    let kappa = if is("sweep-kappa") {
        let dipole = parse_dipole(&o.kappa_dipole).map_err(|e| usage("--kappa-dipole", e))?;
        forbid(!(o.kappa_a > o.kappa_c && o.kappa_c > 0.0), "--kappa-a", "needs A > C > 0")?;
        Some(KappaFamily { a_ghz: o.kappa_a, c_ghz: o.kappa_c, dipole_abc: dipole })
    } else {
        None
    };

    let system = match (&kappa, single) {
        (Some(fam), _) => {
            let spec = fam.spec(0.0).map_err(|e| usage("--kappa-dipole", e))?;
            if single {
                System::Single(spec)
            } else {
                System::Pair(spec.clone(), spec)
            }
        }
        (None, true) => System::Single(specs[0].clone()),
        (None, false) => {
            let second = specs.get(1).unwrap_or(&specs[0]).clone();
            System::Pair(specs[0].clone(), second)
        }
    };
    if let System::Pair(a, b) = &system {
        forbid(
            (a.class == RotorClass::Linear) != (b.class == RotorClass::Linear),
            "--molecule",
            "a pair must be both linear or both non-linear",
        )?;
    }
    let class = if kappa.is_some() { RotorClass::Asymmetric } else { system.first().class };

    let field = FieldConfig::new(o.eps.unwrap_or(0.0), o.theta.unwrap_or(0.0)).map_err(|e| {
        if o.eps.is_some_and(|e| !(e >= 0.0 && e.is_finite())) {
            usage("--eps", e)
        } else {
            usage("--theta", e)
        }
    })?;
    let sector = match &o.sector {
        Some(s) => parse_sector(s).map_err(|e| usage("--sector", e))?,
        None => Sector::NONE,
    };
    forbid(!sector.is_unconstrained() && matches!(system, System::Single(_)), "--sector", "applies to pairs only")?;
    forbid(
        sector.k_total.is_some() && class == RotorClass::Asymmetric,
        "--sector",
        "k_total is not conserved for asymmetric tops",
    )?;
    forbid(
        sector.m_total.is_some() && !field.conserves_m() && !is("sweep-theta"),
        "--sector",
        "an m sector needs a field along the intermolecular axis",
    )?;
    forbid(sector.m_total.is_some() && is("sweep-theta"), "--sector", "θ sweeps break m conservation")?;

    let solver = SolverOptions {
        n_states: o.n_states,
        tol: o.tol,
        seed: o.seed,
        method: match o.method {
            MethodArg::Auto => Method::Auto,
            MethodArg::Dense => Method::Dense,
            MethodArg::Lanczos => Method::Lanczos,
        },
        ..SolverOptions::default()
    };
    let j_max = o.jmax.unwrap_or_else(|| default_jmax(class));
    let fixed = FixedParams {
        system: system.clone(),
        j_max,
        r: o.r.unwrap_or(1.0),
        field,
        solver,
        deg_tol: o.deg_tol,
        sector,
        blocking: !o.no_blocking,
    };

    let grid_values = match &o.grid {
        Some(g) => Some(parse_grid(g).map_err(|e| usage("--grid", e))?),
        None => None,
    };
    let sweep = |mode: SweepMode| -> Result<Job, UsageError> {
        let g = grid_values.clone().unwrap_or_else(|| default_grid(mode));
        SweepPlan::new(mode, g, fixed.clone(), kappa.clone()).map(Job::Sweep).map_err(|e| usage("--grid", e))
    };
    let job = match command {
        Command::Spectrum(_) => {
            let plan = if single {
                SweepPlan::new(SweepMode::Stark, vec![field.epsilon], fixed.clone(), None)
            } else {
                SweepPlan::new(SweepMode::R, vec![fixed.r], fixed.clone(), None)
            };
            Job::Sweep(plan.map_err(|e| usage("--r", e))?)
        }
        Command::SweepR(_) => sweep(SweepMode::R)?,
        Command::SweepTheta(_) => sweep(SweepMode::Theta)?,
        Command::SweepField(_) => sweep(SweepMode::Field)?,
        Command::SweepKappa(_) => sweep(SweepMode::Kappa)?,
        Command::Stark(_) => sweep(SweepMode::Stark)?,
        Command::Convergence(_) => {
            let g = grid_values.unwrap_or_else(|| (1..=default_jmax(class)).map(f64::from).collect());
            if g.iter().any(|&j| j < 0.0 || j.fract() != 0.0) {
                return Err(usage("--grid", "j_max values must be non-negative integers"));
            }
            let j: Vec<u32> = g.iter().map(|&x| x as u32).collect();
            // validate as the solver will see it
            SweepPlan::new(SweepMode::Convergence, g, fixed.clone(), None).map_err(|e| usage("--grid", e))?;
            Job::Convergence { fixed, j_max: j }
        }
        Command::DumpMatrix(_) => Job::DumpMatrix(fixed),
    };
    let molecules = match &system {
        System::Single(s) => vec![s.name.clone()],
        System::Pair(a, b) => vec![a.name.clone(), b.name.clone()],
    };
    Ok(RunConfig { subcommand: name, job, molecules, out: o.out.clone(), si: o.si, threads: o.threads })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> Result<RunConfig, UsageError> {
        let mut argv = vec!["rotorspec"];
        argv.extend_from_slice(args);
        build(&Cli::try_parse_from(argv).unwrap().command)
    }

    #[test]
    fn linear_pair_r_sweep_setup_is_valid() {
        let c = cfg(&["sweep-r", "--molecule", "linear", "--eps", "4.0", "--theta", "0", "--grid", "0.2:10:60:log"]).unwrap();
        let Job::Sweep(plan) = c.job else { panic!() };
        assert_eq!(plan.mode, SweepMode::R);
        assert_eq!(plan.grid.len(), 60);
        assert_eq!(plan.fixed.j_max, 7);
        assert_eq!(plan.fixed.field.epsilon, 4.0);
        assert_eq!(plan.fixed.solver.n_states, 40);
        assert_eq!(plan.fixed.solver.tol, 1e-10);
        assert_eq!(plan.fixed.deg_tol, 1e-8);
    }

    #[test]
    fn stark_setup_is_single_molecule() {
        let c = cfg(&["stark", "--molecule", "CHF3", "--grid", "0:10:101"]).unwrap();
        let Job::Sweep(plan) = c.job else { panic!() };
        assert!(matches!(plan.fixed.system, System::Single(_)));
        assert_eq!(plan.grid.len(), 101);
        assert_eq!(plan.fixed.j_max, 5);
    }

    #[test]
    fn descending_grid_is_rejected() {
        let e = cfg(&["sweep-r", "--grid", "10:0.2:60"]).unwrap_err();
        assert_eq!(e.flag, "--grid");
        assert!(e.msg.contains("non-monotone"));
    }

    #[test]
    fn conflicts_name_the_flag() {
        assert_eq!(cfg(&["sweep-theta", "--theta", "10"]).unwrap_err().flag, "--theta");
        assert_eq!(cfg(&["sweep-r", "--r", "1"]).unwrap_err().flag, "--r");
        assert_eq!(cfg(&["stark", "--eps", "1"]).unwrap_err().flag, "--eps");
        assert_eq!(cfg(&["spectrum", "--grid", "1:2:3"]).unwrap_err().flag, "--grid");
        assert_eq!(cfg(&["spectrum", "--molecule", "nonesuch"]).unwrap_err().flag, "--molecule");
        assert_eq!(cfg(&["spectrum", "--molecule", "linear", "--molecule", "CHF3"]).unwrap_err().flag, "--molecule");
        assert_eq!(cfg(&["spectrum", "--eps", "1", "--theta", "20", "--sector", "m=0"]).unwrap_err().flag, "--sector");
        assert_eq!(cfg(&["spectrum", "--r", "-1"]).unwrap_err().flag, "--r");
        assert_eq!(cfg(&["spectrum", "--eps", "-1"]).unwrap_err().flag, "--eps");
        assert_eq!(cfg(&["sweep-kappa", "--grid", "-1:0.5:4"]).unwrap_err().flag, "--grid");
    }

    #[test]
    fn grid_and_sector_parsing() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:x").is_err());
        assert!(parse_grid("0:1:3:lin").is_err());
        assert_eq!(parse_sector("m=0/k=1").unwrap(), Sector { m_total: Some(0), k_total: Some(1) });
        assert_eq!(parse_sector("k=-2").unwrap(), Sector { m_total: None, k_total: Some(-2) });
        assert!(parse_sector("m=0/m=1").is_err());
        assert!(parse_sector("j=1").is_err());
    }

    #[test]
    fn convergence_defaults() {
        let c = cfg(&["convergence", "--eps", "4"]).unwrap();
        let Job::Convergence { j_max, .. } = c.job else { panic!() };
        assert_eq!(j_max, (1..=7).collect::<Vec<u32>>());
        assert_eq!(cfg(&["convergence", "--grid", "1:2.5:2"]).unwrap_err().flag, "--grid");
    }
}
