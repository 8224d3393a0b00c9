//! Parameter sweeps with state tracking, labels and dipole observables.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::basis::{build_pair_basis, build_single_basis, BasisSet, Sector};
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble_models, pair_models, single_assemble_model, FieldConfig};
use crate::molecule::{MoleculeSpec, RotorClass, RotorModel, UnitSystem};
use crate::observables::{expectation_dipoles, DipoleReport};
use crate::solver::{
    label_state, solve_layout, track_states, EigenSolution, LabelScheme, Parity, SectorProblem, SolverOptions,
    Symmetries, TauTable, DEFAULT_DEG_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Separation `r / r_B`.
    R,
    /// Field direction in degrees from the Z axis.
    Theta,
    /// Field magnitude ε for a pair.
    Field,
    /// Ray's asymmetry parameter at fixed A and C.
    Kappa,
    /// Field magnitude ε for a single molecule.
    Stark,
    /// Basis cutoff `j_max`.
    Convergence,
}

impl SweepMode {
    pub fn param_name(self) -> &'static str {
        match self {
            SweepMode::R => "r",
            SweepMode::Theta => "theta_deg",
            SweepMode::Field | SweepMode::Stark => "eps",
            SweepMode::Kappa => "kappa",
            SweepMode::Convergence => "jmax",
        }
    }

    /// Unit of the `param_si` column.
    pub fn si_unit(self) -> &'static str {
        match self {
            SweepMode::R => "nm",
            SweepMode::Theta => "deg",
            SweepMode::Field | SweepMode::Stark => "kV/cm",
            SweepMode::Kappa => "1",
            SweepMode::Convergence => "1",
        }
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepMode::R => "sweep-r",
            SweepMode::Theta => "sweep-theta",
            SweepMode::Field => "sweep-field",
            SweepMode::Kappa => "sweep-kappa",
            SweepMode::Stark => "stark",
            SweepMode::Convergence => "convergence",
        })
    }
}

/// One molecule or an interacting pair.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Single(MoleculeSpec),
    Pair(MoleculeSpec, MoleculeSpec),
}

impl System {
    pub fn first(&self) -> &MoleculeSpec {
        match self {
            System::Single(s) | System::Pair(s, _) => s,
        }
    }

    pub fn is_pair(&self) -> bool {
        matches!(self, System::Pair(..))
    }
}

/// Asymmetric tops sharing A, C and the body-frame dipole, with
/// `B = [κ(A − C) + A + C] / 2`.
///
/// A κ sweep keeps one unit system for every point: energies in units of C,
/// lengths in the r_B and fields in the B/d that C defines.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaFamily {
    pub a_ghz: f64,
    pub c_ghz: f64,
    pub dipole_abc: [f64; 3],
}

impl KappaFamily {
    pub fn b_ghz(&self, kappa: f64) -> f64 {
        0.5 * (kappa * (self.a_ghz - self.c_ghz) + self.a_ghz + self.c_ghz)
    }

    pub fn spec(&self, kappa: f64) -> Result<MoleculeSpec> {
        if !(kappa > -1.0 && kappa < 1.0) {
            return Err(Error::Sweep(format!("kappa = {kappa} outside the open interval (-1, 1)")));
        }
        MoleculeSpec::new(format!("kappa={kappa}"), Some(self.a_ghz), self.b_ghz(kappa), self.c_ghz, self.dipole_abc)
    }

    /// The symmetric top reached at `κ = -1` (B = C) or `κ = +1` (B = A).
    pub fn symmetric_limit(&self, kappa_sign: f64) -> Result<MoleculeSpec> {
        let b = if kappa_sign < 0.0 { self.c_ghz } else { self.a_ghz };
        MoleculeSpec::new("kappa-limit", Some(self.a_ghz), b, self.c_ghz, self.dipole_abc)
    }

    fn system(&self, kappa: f64, pair: bool) -> Result<(Vec<RotorModel>, UnitSystem)> {
        let spec = self.spec(kappa)?;
        let model = spec.rotor_model_in_units(self.c_ghz, spec.dipole_magnitude());
        let n = if pair { 2 } else { 1 };
        Ok((vec![model; n], spec.scales_for_energy_unit(self.c_ghz)))
    }
}

/// Parameters held fixed along a sweep.
#[derive(Debug, Clone)]
pub struct FixedParams {
    pub system: System,
    pub j_max: u32,
    pub r: f64,
    pub field: FieldConfig,
    pub solver: SolverOptions,
    pub deg_tol: f64,
    /// Restriction of the layout basis; [`Sector::NONE`] keeps every state.
    pub sector: Sector,
    /// Split each point into conserved `m_total` / `k_total` blocks.
    pub blocking: bool,
}

impl FixedParams {
    pub fn new(system: System, j_max: u32) -> Self {
        FixedParams {
            system,
            j_max,
            r: 1.0,
            field: FieldConfig::zero(),
            solver: SolverOptions::default(),
            deg_tol: DEFAULT_DEG_TOL,
            sector: Sector::NONE,
            blocking: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub mode: SweepMode,
    pub grid: Vec<f64>,
    pub fixed: FixedParams,
    /// Required for [`SweepMode::Kappa`].
    pub kappa: Option<KappaFamily>,
}

/// Evenly spaced values, log-spaced when `log` is set.
pub fn grid(start: f64, stop: f64, count: usize, log: bool) -> Result<Vec<f64>> {
    if count == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(Error::Sweep("grid needs finite endpoints and at least one point".into()));
    }
    if log && (start <= 0.0 || stop <= 0.0) {
        return Err(Error::Sweep("log grid endpoints must be positive".into()));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            let t = i as f64 / last;
            if i == count - 1 {
                stop
            } else if log {
                (start.ln() + t * (stop.ln() - start.ln())).exp()
            } else {
                start + t * (stop - start)
            }
        })
        .collect())
}

/// Default grid of each mode.
pub fn default_grid(mode: SweepMode) -> Vec<f64> {
    let g = match mode {
        SweepMode::R => grid(0.2, 10.0, 60, true),
        SweepMode::Theta => grid(0.0, 90.0, 91, false),
        SweepMode::Field | SweepMode::Stark => grid(0.0, 10.0, 101, false),
        SweepMode::Kappa => grid(-0.95, 0.95, 39, false),
        SweepMode::Convergence => grid(1.0, 7.0, 7, false),
    };
    g.expect("default grids are valid")
}

fn strictly_monotone(g: &[f64]) -> bool {
    g.windows(2).all(|w| w[1] > w[0]) || g.windows(2).all(|w| w[1] < w[0])
}

impl SweepPlan {
    pub fn new(mode: SweepMode, grid: Vec<f64>, fixed: FixedParams, kappa: Option<KappaFamily>) -> Result<Self> {
        let plan = SweepPlan { mode, grid, fixed, kappa };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.is_empty() {
            return Err(Error::Sweep("empty grid".into()));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Sweep("grid values must be finite".into()));
        }
        if !strictly_monotone(g) {
            return Err(Error::Sweep("grid must be strictly monotone".into()));
        }
        let f = &self.fixed;
        if !(f.deg_tol >= 0.0) || !(f.solver.tol > 0.0) || f.solver.n_states == 0 {
            return Err(Error::Sweep("tolerances must be positive and n_states at least one".into()));
        }
        FieldConfig::new(f.field.epsilon, f.field.theta_deg)?;
        let pair = f.system.is_pair();
        if pair && f.mode_uses_r() && !(f.r > 0.0 && f.r.is_finite()) {
            return Err(Error::Sweep(format!("separation r = {} must be positive", f.r)));
        }
        match self.mode {
            SweepMode::R => {
                if !pair {
                    return Err(Error::Sweep("r sweeps need a pair".into()));
                }
                if g.iter().any(|&r| r <= 0.0) {
                    return Err(Error::Sweep("r grid values must be positive".into()));
                }
            }
            SweepMode::Theta => {}
            SweepMode::Field | SweepMode::Stark => {
                if g.iter().any(|&e| e < 0.0) {
                    return Err(Error::Sweep("field magnitudes must be non-negative".into()));
                }
                if self.mode == SweepMode::Stark && pair {
                    return Err(Error::Sweep("Stark curves are for a single molecule".into()));
                }
            }
            SweepMode::Kappa => {
                let fam = self.kappa.as_ref().ok_or_else(|| Error::Sweep("kappa sweeps need A and C".into()))?;
                if !(fam.a_ghz > fam.c_ghz && fam.c_ghz > 0.0) {
                    return Err(Error::Sweep("kappa sweeps need A > C > 0".into()));
                }
                for &k in g {
                    fam.spec(k)?;
                }
            }
            SweepMode::Convergence => {
                if !g.windows(2).all(|w| w[1] > w[0]) {
                    return Err(Error::Sweep("j_max grid must be ascending".into()));
                }
                if g.iter().any(|&j| j < 0.0 || j.fract() != 0.0 || j > 64.0) {
                    return Err(Error::Sweep("j_max grid values must be small non-negative integers".into()));
                }
            }
        }
        if self.mode != SweepMode::Kappa {
            if let System::Pair(a, b) = &f.system {
                if (a.class == RotorClass::Linear) != (b.class == RotorClass::Linear) {
                    return Err(Error::Sweep("pairs must be both linear or both non-linear".into()));
                }
            }
        }
        Ok(())
    }

    /// Grid index of the labelling reference point.
    pub fn reference_index(&self) -> usize {
        let g = &self.grid;
        let last = g.len() - 1;
        let pick_max = |g: &[f64]| if g[last] > g[0] { last } else { 0 };
        let pick_min = |g: &[f64]| if g[last] < g[0] { last } else { 0 };
        match self.mode {
            SweepMode::R => pick_max(g),
            SweepMode::Theta => {
                if g[last].abs() < g[0].abs() {
                    last
                } else {
                    0
                }
            }
            SweepMode::Field | SweepMode::Stark | SweepMode::Kappa | SweepMode::Convergence => pick_min(g),
        }
    }
}

impl FixedParams {
    fn mode_uses_r(&self) -> bool {
        self.system.is_pair()
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub track: usize,
    pub label: String,
    pub parity: Parity,
    pub sector: Sector,
    pub group: usize,
    pub energy: f64,
    /// `<d_X>, <d_Y>, <d_Z>` averaged over the molecules.
    pub dipole: [f64; 3],
    /// Same, averaged over the state's degenerate group.
    pub group_dipole: [f64; 3],
    pub residual: f64,
    pub energy_ghz: f64,
    pub param_si: f64,
}

/// Run summary reported next to the table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMeta {
    pub mode: SweepMode,
    pub j_max: Vec<u32>,
    pub basis_dim: Vec<usize>,
    pub sector_policy: String,
    pub tol: f64,
    pub deg_tol: f64,
    pub n_states: usize,
    pub seed: u64,
    pub methods: Vec<String>,
    pub matvecs: usize,
    pub points: usize,
    /// Non-degenerate states whose exchange parity was not definite.
    pub parity_flags: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub meta: SweepMeta,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl SweepTable {
    pub const HEADER: [&'static str; 11] =
        ["param", "track", "label", "parity", "sector", "group", "energy_B", "dX_d", "dY_d", "dZ_d", "residual"];

    /// Rows at one grid value, in track order.
    pub fn at(&self, param: f64) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.param == param).collect()
    }

    /// Rows of one track, in grid order.
    pub fn track(&self, id: usize) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.track == id).collect()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.param) {
                out.push(r.param);
            }
        }
        out
    }

    /// CSV with a header row; `si` appends `energy_GHz` and `param_si`.
    pub fn write_csv<W: Write>(&self, mut w: W, si: bool) -> Result<()> {
        let mut header = Self::HEADER.join(",");
        if si {
            header.push_str(",energy_GHz,param_si");
        }
        writeln!(w, "{header}")?;
        for r in &self.rows {
            write!(
                w,
                "{:.16e},{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.param,
                r.track,
                csv_field(&r.label),
                csv_field(&r.parity.to_string()),
                csv_field(&r.sector.to_string()),
                r.group,
                r.energy,
                r.dipole[0],
                r.dipole[1],
                r.dipole[2],
                r.residual
            )?;
            if si {
                write!(w, ",{:.16e},{:.16e}", r.energy_ghz, r.param_si)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Everything needed to solve one grid point.
struct PointSetup {
    models: Vec<RotorModel>,
    units: UnitSystem,
    r: f64,
    field: FieldConfig,
}

struct PointResult {
    solution: EigenSolution,
    dipoles: DipoleReport,
    units: UnitSystem,
}

fn system_models(system: &System) -> (Vec<RotorModel>, UnitSystem) {
    match system {
        System::Single(s) => (vec![s.rotor_model()], s.characteristic_scales()),
        System::Pair(a, b) => {
            let (m1, m2) = pair_models(a, b);
            (vec![m1, m2], a.characteristic_scales())
        }
    }
}

fn layout_class(plan: &SweepPlan) -> RotorClass {
    if plan.mode == SweepMode::Kappa {
        RotorClass::Asymmetric
    } else {
        plan.fixed.system.first().class
    }
}

fn build_layout(plan: &SweepPlan, j_max: u32) -> Result<BasisSet> {
    let class = layout_class(plan);
    if plan.fixed.system.is_pair() {
        build_pair_basis(class, j_max, plan.fixed.sector)
    } else {
        if !plan.fixed.sector.is_unconstrained() {
            return Err(Error::Sweep("sector restriction applies to pairs only".into()));
        }
        Ok(build_single_basis(class, j_max))
    }
}

fn point_setup(plan: &SweepPlan, x: f64) -> Result<PointSetup> {
    let f = &plan.fixed;
    let (mut models, mut units) = system_models(&f.system);
    let mut setup_r = f.r;
    let mut field = f.field;
    match plan.mode {
        SweepMode::R => setup_r = x,
        SweepMode::Theta => field = FieldConfig::new(f.field.epsilon, x)?,
        SweepMode::Field | SweepMode::Stark => field = FieldConfig::new(x, f.field.theta_deg)?,
        SweepMode::Kappa => (models, units) = plan.kappa.as_ref().expect("validated").system(x, f.system.is_pair())?,
        SweepMode::Convergence => {}
    }
    Ok(PointSetup { models, units, r: setup_r, field })
}

fn symmetries(layout: &BasisSet, setup: &PointSetup) -> Symmetries {
    let k = !layout.is_linear() && setup.models.iter().all(RotorModel::conserves_k);
    Symmetries {
        m_total: setup.field.conserves_m(),
        k_total: k,
        exchange: layout.is_pair() && setup.models.len() == 2 && setup.models[0] == setup.models[1],
    }
}

/// Sector problems of one point over `layout`.
fn point_problems(layout: &BasisSet, setup: &PointSetup, blocking: bool) -> Result<(Vec<SectorProblem>, Symmetries)> {
    let sym = symmetries(layout, setup);
    if !layout.is_pair() {
        let matrix = single_assemble_model(&setup.models[0], &setup.field, layout)?;
        return Ok((vec![SectorProblem { sector: Sector::NONE, parent_indices: None, matrix }], sym));
    }
    let (m1, m2) = (&setup.models[0], &setup.models[1]);
    let by_m = blocking && sym.m_total && layout.sector().m_total.is_none();
    let by_k = blocking && sym.k_total && layout.sector().k_total.is_none();
    if !by_m && !by_k {
        let matrix = assemble_models(m1, m2, setup.r, &setup.field, layout)?;
        return Ok((vec![SectorProblem { sector: layout.sector(), parent_indices: None, matrix }], sym));
    }
    let problems = layout
        .sector_blocks(by_m, by_k)?
        .into_iter()
        .map(|b| {
            let matrix = assemble_models(m1, m2, setup.r, &setup.field, &b.basis)?;
            Ok(SectorProblem { sector: b.basis.sector(), parent_indices: Some(b.parent_indices), matrix })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((problems, sym))
}

fn solve_point(plan: &SweepPlan, layout: &BasisSet, x: f64) -> Result<PointResult> {
    let setup = point_setup(plan, x)?;
    let (problems, sym) = point_problems(layout, &setup, plan.fixed.blocking)?;
    let solution = solve_layout(&problems, layout, &sym, &plan.fixed.solver, plan.fixed.deg_tol)?;
    let dipoles = expectation_dipoles(&solution, layout, &setup.models)?;
    Ok(PointResult { solution, dipoles, units: setup.units })
}

fn label_scheme(plan: &SweepPlan, layout: &BasisSet) -> LabelScheme {
    if plan.mode == SweepMode::Kappa {
        return LabelScheme::JOnly;
    }
    match layout.class() {
        RotorClass::Linear => LabelScheme::Linear,
        RotorClass::Asymmetric => {
            let (models, _) = system_models(&plan.fixed.system);
            LabelScheme::Asymmetric(TauTable::new(&models[0], layout.j_max()))
        }
        _ => LabelScheme::Symmetric,
    }
}

fn param_si(mode: SweepMode, x: f64, units: &UnitSystem) -> f64 {
    match mode {
        SweepMode::R => units.length_to_nm(x),
        SweepMode::Field | SweepMode::Stark => units.field_to_kv_per_cm(x),
        SweepMode::Theta | SweepMode::Kappa | SweepMode::Convergence => x,
    }
}

fn sector_policy(plan: &SweepPlan) -> String {
    let f = &plan.fixed;
    let restriction = if f.sector.is_unconstrained() { "full basis".to_string() } else { format!("restricted to {}", f.sector) };
    let blocks = if f.blocking && f.system.is_pair() { "blocked by conserved m_total/k_total" } else { "unblocked" };
    format!("{restriction}, {blocks}")
}

struct Accumulator {
    rows: Vec<(usize, SweepRow)>,
    meta_dims: Vec<usize>,
    methods: Vec<String>,
    matvecs: usize,
    parity_flags: usize,
}

impl Accumulator {
    fn absorb(&mut self, solution: &EigenSolution) {
        self.matvecs += solution.matvecs;
        self.parity_flags += solution.parity_flags.len();
        for m in &solution.methods {
            let s = m.to_string();
            if !self.methods.contains(&s) {
                self.methods.push(s);
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn emit_rows(
    acc: &mut Accumulator,
    mode: SweepMode,
    index: usize,
    x: f64,
    res: &PointResult,
    tracks: &[usize],
    labels: &[String],
) {
    let sol = &res.solution;
    let mut order: Vec<usize> = (0..sol.len()).collect();
    order.sort_by_key(|&i| tracks[i]);
    for i in order {
        let g = sol.group_of[i];
        acc.rows.push((
            index,
            SweepRow {
                param: x,
                track: tracks[i],
                label: labels[i].clone(),
                parity: sol.parity[i],
                sector: sol.sectors[i],
                group: g,
                energy: sol.values[i],
                dipole: res.dipoles.states[i].average,
                group_dipole: res.dipoles.group_average[g],
                residual: sol.residuals[i],
                energy_ghz: res.units.energy_to_ghz(sol.values[i]),
                param_si: param_si(mode, x, &res.units),
            },
        ));
    }
}

fn wrap(index: usize, param: f64) -> impl Fn(Error) -> Error {
    move |e| Error::SweepPoint { index, param, source: Box::new(e) }
}

/// Solve every grid point, track states from the reference point outwards
/// and attach labels and dipole expectations.
///
/// Points are solved in batches of the rayon pool size and tracked one after
/// another, so only two solutions are held per tracking step.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepTable> {
    plan.validate()?;
    let f = &plan.fixed;
    let n = plan.grid.len();
    let mut acc = Accumulator { rows: Vec::new(), meta_dims: Vec::new(), methods: Vec::new(), matvecs: 0, parity_flags: 0 };

    if plan.mode == SweepMode::Convergence {
        let mut j_max = Vec::new();
        for (index, &x) in plan.grid.iter().enumerate() {
            let layout = build_layout(plan, x as u32).map_err(wrap(index, x))?;
            let res = solve_point(plan, &layout, x).map_err(wrap(index, x))?;
            let scheme = label_scheme(plan, &layout);
            let labels: Vec<String> = (0..res.solution.len())
                .map(|i| label_state(&layout, &res.solution.vectors[i], &scheme, res.solution.parity[i]).to_string())
                .collect();
            let tracks: Vec<usize> = (0..res.solution.len()).collect();
            acc.absorb(&res.solution);
            acc.meta_dims.push(layout.dim());
            j_max.push(x as u32);
            emit_rows(&mut acc, plan.mode, index, x, &res, &tracks, &labels);
        }
        return Ok(finish(plan, acc, j_max));
    }

    let layout = build_layout(plan, f.j_max)?;
    acc.meta_dims.push(layout.dim());
    let scheme = label_scheme(plan, &layout);
    let order: Vec<usize> = if plan.reference_index() == 0 { (0..n).collect() } else { (0..n).rev().collect() };

    let batch = rayon::current_num_threads().max(1);
    let mut prev: Option<(EigenSolution, Vec<usize>)> = None;
    let mut next_track = 0usize;
    let mut track_labels: HashMap<usize, String> = HashMap::new();
    for chunk in order.chunks(batch) {
        let results: Vec<Result<PointResult>> = chunk
            .par_iter()
            .map(|&index| {
                let x = plan.grid[index];
                solve_point(plan, &layout, x).map_err(wrap(index, x))
            })
            .collect();
        for (&index, res) in chunk.iter().zip(results) {
            let res = res?;
            let x = plan.grid[index];
            let sol = &res.solution;
            let mut tracks = vec![usize::MAX; sol.len()];
            let mut labels = vec![String::new(); sol.len()];
            let prev_labels: Option<(&EigenSolution, &[usize])> = prev.as_ref().map(|(s, t)| (s, t.as_slice()));
            let matches = prev_labels.map(|(ps, _)| track_states(ps, sol));
            for i in 0..sol.len() {
                let inherited = match (&matches, prev_labels) {
                    (Some(m), Some((_, pt))) => m[i].prev.map(|p| pt[p]),
                    _ => None,
                };
                tracks[i] = inherited.unwrap_or_else(|| {
                    next_track += 1;
                    next_track - 1
                });
            }
            for i in 0..sol.len() {
                labels[i] = track_labels
                    .entry(tracks[i])
                    .or_insert_with(|| {
                        let label = label_state(&layout, &sol.vectors[i], &scheme, sol.parity[i]).to_string();
                        if prev.is_some() && !label.ends_with('?') {
                            label + "?"
                        } else {
                            label
                        }
                    })
                    .clone();
            }
            acc.absorb(sol);
            emit_rows(&mut acc, plan.mode, index, x, &res, &tracks, &labels);
            prev = Some((res.solution, tracks));
        }
    }
    Ok(finish(plan, acc, vec![f.j_max]))
}

fn finish(plan: &SweepPlan, mut acc: Accumulator, j_max: Vec<u32>) -> SweepTable {
    acc.rows.sort_by_key(|(index, r)| (*index, r.track));
    let f = &plan.fixed;
    SweepTable {
        rows: acc.rows.into_iter().map(|(_, r)| r).collect(),
        meta: SweepMeta {
            mode: plan.mode,
            j_max,
            basis_dim: acc.meta_dims,
            sector_policy: sector_policy(plan),
            tol: f.solver.tol,
            deg_tol: f.deg_tol,
            n_states: f.solver.n_states,
            seed: f.solver.seed,
            methods: acc.methods,
            matvecs: acc.matvecs,
            points: plan.grid.len(),
            parity_flags: acc.parity_flags,
        },
    }
}

/// Single-molecule energies and dipoles versus field magnitude at a fixed
/// field direction.
pub fn stark_curve(spec: &MoleculeSpec, theta_deg: f64, eps_grid: &[f64], j_max: u32, opts: &SolverOptions) -> Result<SweepTable> {
    let mut fixed = FixedParams::new(System::Single(spec.clone()), j_max);
    fixed.field = FieldConfig::new(0.0, theta_deg)?;
    fixed.solver = opts.clone();
    run_sweep(&SweepPlan::new(SweepMode::Stark, eps_grid.to_vec(), fixed, None)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub j_max: u32,
    /// Position in the ascending spectrum.
    pub state: usize,
    pub energy: f64,
    /// Group-averaged `<d_Z>`.
    pub dz: f64,
    /// Change from the previous `j_max`; `None` on the first.
    pub d_energy: Option<f64>,
    pub d_dz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub meta: SweepMeta,
}

impl ConvergenceTable {
    pub const HEADER: [&'static str; 6] = ["jmax", "state", "energy_B", "dZ_d", "dE_B", "ddZ_d"];

    pub fn ground_energies(&self) -> Vec<(u32, f64)> {
        self.rows.iter().filter(|r| r.state == 0).map(|r| (r.j_max, r.energy)).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::HEADER.join(","))?;
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.16e}"));
        for r in &self.rows {
            writeln!(w, "{},{},{:.16e},{:.16e},{},{}", r.j_max, r.state, r.energy, r.dz, opt(r.d_energy), opt(r.d_dz))?;
        }
        Ok(())
    }
}

/// Repeat the solve of `fixed` at each `j_max` and report successive
/// differences of the lowest `fixed.solver.n_states` levels.
pub fn convergence_study(fixed: &FixedParams, j_max_grid: &[u32]) -> Result<ConvergenceTable> {
    let grid: Vec<f64> = j_max_grid.iter().map(|&j| j as f64).collect();
    let plan = SweepPlan::new(SweepMode::Convergence, grid, fixed.clone(), None)?;
    let table = run_sweep(&plan)?;
    let n = fixed.solver.n_states;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut previous: Vec<(f64, f64)> = Vec::new();
    for x in table.params() {
        let mut at: Vec<&SweepRow> = table.at(x);
        at.sort_by_key(|r| r.track);
        let current: Vec<(f64, f64)> = at.iter().take(n).map(|r| (r.energy, r.group_dipole[2])).collect();
        for (state, &(e, dz)) in current.iter().enumerate() {
            let before = previous.get(state);
            rows.push(ConvergenceRow {
                j_max: x as u32,
                state,
                energy: e,
                dz,
                d_energy: before.map(|p| e - p.0),
                d_dz: before.map(|p| dz - p.1),
            });
        }
        previous = current;
    }
    Ok(ConvergenceTable { rows, meta: table.meta })
}
