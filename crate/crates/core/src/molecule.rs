//! Molecule records, rotor classification, axis conventions and unit scales.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;

use crate::angular::{cartesian_to_spherical_real, SphericalVector};
use crate::error::{Error, Result};

/// One Debye in C·m.
pub const DEBYE_SI: f64 = 3.335_640_951_981_52e-30;
/// Planck constant in J·s.
pub const PLANCK_SI: f64 = 6.626_070_15e-34;
/// Vacuum permittivity in F/m.
pub const EPSILON0_SI: f64 = 8.854_187_812_8e-12;

/// Relative tolerance for deciding that two rotational constants are equal.
pub const CLASS_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RotorClass {
    Linear,
    Spherical,
    ProlateSymmetric,
    OblateSymmetric,
    Asymmetric,
}

impl RotorClass {
    pub fn is_symmetric_top(self) -> bool {
        matches!(self, RotorClass::ProlateSymmetric | RotorClass::OblateSymmetric)
    }

    pub fn name(self) -> &'static str {
        match self {
            RotorClass::Linear => "linear",
            RotorClass::Spherical => "spherical",
            RotorClass::ProlateSymmetric => "prolate",
            RotorClass::OblateSymmetric => "oblate",
            RotorClass::Asymmetric => "asymmetric",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(RotorClass::Linear),
            "spherical" => Ok(RotorClass::Spherical),
            "prolate" | "prolate-symmetric" | "prolatesymmetric" => Ok(RotorClass::ProlateSymmetric),
            "oblate" | "oblate-symmetric" | "oblatesymmetric" => Ok(RotorClass::OblateSymmetric),
            "asymmetric" => Ok(RotorClass::Asymmetric),
            other => Err(Error::Molecule(format!("unknown rotor class '{other}'"))),
        }
    }
}

impl fmt::Display for RotorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn approx_equal(x: f64, y: f64) -> bool {
    (x - y).abs() <= CLASS_REL_TOL * x.abs().max(y.abs())
}

/// Classify a rotor from its rotational constants (GHz).
///
/// `a = None` marks a linear molecule, which then requires `B = C`.
pub fn classify(a: Option<f64>, b: f64, c: f64) -> Result<RotorClass> {
    if !(b.is_finite() && c.is_finite()) || c < 0.0 || b < c {
        return Err(Error::Molecule(format!(
            "rotational constants must satisfy B >= C >= 0 (got B = {b}, C = {c})"
        )));
    }
    let Some(a) = a else {
        return if approx_equal(b, c) && b > 0.0 {
            Ok(RotorClass::Linear)
        } else {
            Err(Error::Molecule(format!(
                "a linear rotor needs B = C > 0 (got B = {b}, C = {c})"
            )))
        };
    };
    if !a.is_finite() || a < b {
        return Err(Error::Molecule(format!(
            "rotational constants must satisfy A >= B >= C (got A = {a}, B = {b}, C = {c})"
        )));
    }
    Ok(match (approx_equal(a, b), approx_equal(b, c)) {
        (true, true) => RotorClass::Spherical,
        (true, false) => RotorClass::OblateSymmetric,
        (false, true) => RotorClass::ProlateSymmetric,
        (false, false) => RotorClass::Asymmetric,
    })
}

/// Principal inertial axis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrincipalAxis {
    A,
    B,
    C,
}

/// Assignment of principal axes to the molecule-fixed `(x, y, z)` frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisMap {
    pub xyz: [PrincipalAxis; 3],
}

impl AxisMap {
    /// `(x, y, z) = (a, b, c)`.
    pub const OBLATE: AxisMap = AxisMap { xyz: [PrincipalAxis::A, PrincipalAxis::B, PrincipalAxis::C] };
    /// `(x, y, z) = (b, c, a)`.
    pub const PROLATE: AxisMap = AxisMap { xyz: [PrincipalAxis::B, PrincipalAxis::C, PrincipalAxis::A] };

    pub fn for_class(class: RotorClass) -> AxisMap {
        match class {
            RotorClass::OblateSymmetric => AxisMap::OBLATE,
            _ => AxisMap::PROLATE,
        }
    }

    fn pick(&self, abc: [f64; 3]) -> [f64; 3] {
        self.xyz.map(|axis| match axis {
            PrincipalAxis::A => abc[0],
            PrincipalAxis::B => abc[1],
            PrincipalAxis::C => abc[2],
        })
    }
}

/// Characteristic scales of a molecule.
///
/// Dimensionless quantities used throughout the crate are energy / B,
/// separation / r_B and field ε = d·E / B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    /// Energy unit B in GHz.
    pub energy_ghz: f64,
    /// Length unit r_B = (d²/B)^(1/3) in nm (Gaussian-style d²/r³ energies).
    pub length_nm: f64,
    /// Field unit B/d in kV/cm.
    pub field_kv_per_cm: f64,
}

impl UnitSystem {
    pub fn energy_to_ghz(&self, e: f64) -> f64 {
        e * self.energy_ghz
    }
    pub fn energy_from_ghz(&self, ghz: f64) -> f64 {
        ghz / self.energy_ghz
    }
    pub fn length_to_nm(&self, r: f64) -> f64 {
        r * self.length_nm
    }
    pub fn length_from_nm(&self, nm: f64) -> f64 {
        nm / self.length_nm
    }
    pub fn field_to_kv_per_cm(&self, eps: f64) -> f64 {
        eps * self.field_kv_per_cm
    }
    pub fn field_from_kv_per_cm(&self, kv_cm: f64) -> f64 {
        kv_cm / self.field_kv_per_cm
    }
}

/// Euclidean norm summed in a fixed magnitude order, so any permutation of
/// the components gives a bit-identical result.
pub fn vector_norm(v: [f64; 3]) -> f64 {
    let mut sq = v.map(|x| x * x);
    sq.sort_by(f64::total_cmp);
    (sq[0] + sq[1] + sq[2]).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeSpec {
    pub name: String,
    /// Rotational constant A in GHz; `None` for linear rotors.
    pub a_ghz: Option<f64>,
    pub b_ghz: f64,
    pub c_ghz: f64,
    /// Dipole components along the principal axes (a, b, c) in Debye.
    pub dipole_abc: [f64; 3],
    pub class: RotorClass,
}

impl MoleculeSpec {
    /// Build a spec and classify it from its constants.
    pub fn new(name: impl Into<String>, a_ghz: Option<f64>, b_ghz: f64, c_ghz: f64, dipole_abc: [f64; 3]) -> Result<Self> {
        let class = classify(a_ghz, b_ghz, c_ghz)?;
        let spec = MoleculeSpec { name: name.into(), a_ghz, b_ghz, c_ghz, dipole_abc, class };
        spec.check_dipole()?;
        Ok(spec)
    }

    /// Generic linear rotor with constant `b_ghz` and dipole `d_debye` along its axis.
    pub fn linear(name: impl Into<String>, b_ghz: f64, d_debye: f64) -> Result<Self> {
        MoleculeSpec::new(name, None, b_ghz, b_ghz, [d_debye, 0.0, 0.0])
    }

    /// Build a spec whose class is asserted by the caller and must agree with
    /// the constants.
    pub fn with_class(
        name: impl Into<String>,
        class: RotorClass,
        a_ghz: Option<f64>,
        b_ghz: f64,
        c_ghz: f64,
        dipole_abc: [f64; 3],
    ) -> Result<Self> {
        let spec = MoleculeSpec::new(name, a_ghz, b_ghz, c_ghz, dipole_abc)?;
        if spec.class != class {
            return Err(Error::Molecule(format!(
                "declared class {class} disagrees with constants (classified as {})",
                spec.class
            )));
        }
        Ok(spec)
    }

    fn check_dipole(&self) -> Result<()> {
        if self.dipole_abc.iter().any(|d| !d.is_finite()) {
            return Err(Error::Molecule("dipole components must be finite".into()));
        }
        if self.dipole_magnitude() <= 0.0 {
            return Err(Error::Molecule(format!("molecule '{}' has zero dipole moment", self.name)));
        }
        Ok(())
    }

    pub fn dipole_magnitude(&self) -> f64 {
        vector_norm(self.dipole_abc)
    }

    pub fn axis_map(&self) -> AxisMap {
        AxisMap::for_class(self.class)
    }

    /// Dipole in the molecule-fixed `(x, y, z)` frame, in Debye.
    pub fn dipole_xyz(&self) -> [f64; 3] {
        match self.class {
            RotorClass::Linear => [0.0, 0.0, self.dipole_magnitude()],
            _ => self.axis_map().pick(self.dipole_abc),
        }
    }

    /// Rotational constants assigned to the molecule-fixed `(x, y, z)` axes, in GHz.
    pub fn constants_xyz(&self) -> [f64; 3] {
        let a = self.a_ghz.unwrap_or(f64::NAN);
        self.axis_map().pick([a, self.b_ghz, self.c_ghz])
    }

    /// Asymmetry parameter κ = (2B − A − C)/(A − C).
    pub fn kappa(&self) -> Result<f64> {
        let Some(a) = self.a_ghz else {
            return Err(Error::Molecule("kappa is undefined for a linear rotor".into()));
        };
        if self.class == RotorClass::Spherical {
            return Err(Error::Molecule("kappa is undefined for a spherical top (A = C)".into()));
        }
        Ok((2.0 * self.b_ghz - a - self.c_ghz) / (a - self.c_ghz))
    }

    /// Unit system built on the middle constant B and |d|.
    pub fn characteristic_scales(&self) -> UnitSystem {
        self.scales_for_energy_unit(self.b_ghz)
    }

    /// Scales derived from this molecule's `|d|` and an arbitrary energy unit.
    pub fn scales_for_energy_unit(&self, energy_ghz: f64) -> UnitSystem {
        let d_si = self.dipole_magnitude() * DEBYE_SI;
        let b_joule = PLANCK_SI * energy_ghz * 1e9;
        let rb3 = d_si * d_si / (4.0 * std::f64::consts::PI * EPSILON0_SI * b_joule);
        let field_v_per_m = b_joule / d_si;
        UnitSystem {
            energy_ghz,
            length_nm: rb3.cbrt() * 1e9,
            field_kv_per_cm: field_v_per_m * 1e-5,
        }
    }

    /// Dimensionless rotor description in this molecule's own units.
    pub fn rotor_model(&self) -> RotorModel {
        self.rotor_model_in_units(self.b_ghz, self.dipole_magnitude())
    }

    /// Dimensionless rotor description with energies in units of
    /// `energy_unit_ghz` and dipoles in units of `dipole_unit_debye`.
    pub fn rotor_model_in_units(&self, energy_unit_ghz: f64, dipole_unit_debye: f64) -> RotorModel {
        let d = self.dipole_xyz().map(|c| c / dipole_unit_debye);
        match self.class {
            RotorClass::Linear | RotorClass::Spherical => {
                let b = self.b_ghz / energy_unit_ghz;
                RotorModel {
                    linear: self.class == RotorClass::Linear,
                    constants: [b, b, b],
                    dipole_xyz: d,
                }
            }
            RotorClass::ProlateSymmetric | RotorClass::OblateSymmetric => {
                // the two constants treated as equal are averaged so that k is exactly conserved
                let [x, y, z] = self.constants_xyz().map(|c| c / energy_unit_ghz);
                let perp = 0.5 * (x + y);
                RotorModel { linear: false, constants: [perp, perp, z], dipole_xyz: d }
            }
            RotorClass::Asymmetric => RotorModel {
                linear: false,
                constants: self.constants_xyz().map(|c| c / energy_unit_ghz),
                dipole_xyz: d,
            },
        }
    }
}

/// Dimensionless single-rotor model: rotational constants for the
/// molecule-fixed axes and the molecule-frame dipole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorModel {
    /// Linear rotors carry only `k = 0` states.
    pub linear: bool,
    /// Constants `(X, Y, Z)` multiplying `J_x², J_y², J_z²`.
    pub constants: [f64; 3],
    /// Molecule-frame dipole `(d_x, d_y, d_z)`.
    pub dipole_xyz: [f64; 3],
}

impl RotorModel {
    pub fn dipole_spherical(&self) -> SphericalVector {
        cartesian_to_spherical_real(self.dipole_xyz)
    }

    /// Molecule-frame spherical dipole component `d_q`.
    pub fn dipole_component(&self, q: i32) -> Complex64 {
        self.dipole_spherical().component(q)
    }

    /// True when neither the rotational term nor the dipole can change `k`.
    pub fn conserves_k(&self) -> bool {
        self.linear
            || (self.constants[0] == self.constants[1] && self.dipole_xyz[0] == 0.0 && self.dipole_xyz[1] == 0.0)
    }

    /// True when every dipole matrix element is real (`d_y = 0`).
    pub fn has_real_dipole(&self) -> bool {
        self.dipole_xyz[1] == 0.0
    }
}

/// Built-in molecule names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["linear", "CHF3", "propanediol-R", "propanediol-S"];

/// Built-in molecule registry.
pub fn builtin(name: &str) -> Option<MoleculeSpec> {
    let spec = match name {
        "linear" => MoleculeSpec::linear("linear", 1.0, 1.0),
        "CHF3" | "chf3" => MoleculeSpec::new("CHF3", Some(10.348), 10.348, 5.6734, [0.0, 0.0, 1.645]),
        "propanediol-R" => MoleculeSpec::new("propanediol-R", Some(8.57205), 3.640, 2.790, [1.2, 1.9, 0.36]),
        "propanediol-S" => MoleculeSpec::new("propanediol-S", Some(8.57205), 3.640, 2.790, [1.2, 1.9, -0.36]),
        _ => return None,
    };
    Some(spec.expect("built-in molecule parameters are valid"))
}

/// Parse the `key=value` molecule definition format.
pub fn parse_molecule_definition(text: &str) -> Result<MoleculeSpec> {
    let mut name = None;
    let mut class = None;
    let (mut a, mut b, mut c) = (None, None, None);
    let mut dipole = [0.0; 3];

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::MoleculeFile { line: line_no, msg };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let number = || {
            value
                .parse::<f64>()
                .map_err(|_| err(format!("'{value}' is not a number for key '{key}'")))
        };
        match key {
            "name" => name = Some(value.to_string()),
            "class" => class = Some(RotorClass::parse(value).map_err(|e| err(e.to_string()))?),
            "A_GHz" => a = Some(number()?),
            "B_GHz" => b = Some(number()?),
            "C_GHz" => c = Some(number()?),
            "da_D" => dipole[0] = number()?,
            "db_D" => dipole[1] = number()?,
            "dc_D" => dipole[2] = number()?,
            other => return Err(err(format!("unknown key '{other}'"))),
        }
    }

    let name = name.unwrap_or_else(|| "unnamed".to_string());
    let b = b.ok_or_else(|| Error::Molecule("missing B_GHz".into()))?;
    match class {
        Some(RotorClass::Linear) => {
            if a.is_some() {
                return Err(Error::Molecule("linear molecules take no A_GHz".into()));
            }
            MoleculeSpec::with_class(name, RotorClass::Linear, None, b, c.unwrap_or(b), dipole)
        }
        Some(declared) => {
            let a = a.ok_or_else(|| Error::Molecule("missing A_GHz".into()))?;
            let c = c.ok_or_else(|| Error::Molecule("missing C_GHz".into()))?;
            MoleculeSpec::with_class(name, declared, Some(a), b, c, dipole)
        }
        None => {
            let c = c.ok_or_else(|| Error::Molecule("missing C_GHz".into()))?;
            MoleculeSpec::new(name, a, b, c, dipole)
        }
    }
}

pub fn load_molecule_file(path: &Path) -> Result<MoleculeSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_molecule_definition(&text)
}

/// Resolve a built-in name, falling back to a definition file path.
pub fn resolve_molecule(selector: &str) -> Result<MoleculeSpec> {
    if let Some(spec) = builtin(selector) {
        return Ok(spec);
    }
    let path = Path::new(selector);
    if path.is_file() {
        return load_molecule_file(path);
    }
    Err(Error::Molecule(format!(
        "unknown molecule '{selector}' (built-ins: {})",
        BUILTIN_NAMES.join(", ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn classify_table_molecules() {
        assert_eq!(classify(Some(10.348), 10.348, 5.6734).unwrap(), RotorClass::OblateSymmetric);
        assert_eq!(classify(Some(8.57205), 3.640, 2.790).unwrap(), RotorClass::Asymmetric);
        assert_eq!(classify(Some(1.0), 1.0, 1.0).unwrap(), RotorClass::Spherical);
        assert_eq!(classify(Some(3.0), 1.0, 1.0).unwrap(), RotorClass::ProlateSymmetric);
        assert_eq!(classify(None, 2.0, 2.0).unwrap(), RotorClass::Linear);
        assert!(classify(Some(1.0), 2.0, 3.0).is_err());
        assert!(classify(None, 2.0, 1.0).is_err());
    }

    #[test]
    fn axis_mapping() {
        let chf3 = builtin("CHF3").unwrap();
        assert_eq!(chf3.dipole_xyz(), [0.0, 0.0, 1.645]);
        let pd = builtin("propanediol-R").unwrap();
        assert_eq!(pd.dipole_xyz(), [1.9, 0.36, 1.2]);
        assert_eq!(builtin("propanediol-S").unwrap().dipole_xyz(), [1.9, -0.36, 1.2]);
        let lin = MoleculeSpec::linear("x", 2.0, 3.5).unwrap();
        assert_eq!(lin.dipole_xyz(), [0.0, 0.0, 3.5]);
    }

    #[test]
    fn kappa_values() {
        let pd = builtin("propanediol-R").unwrap();
        assert_relative_eq!(pd.kappa().unwrap(), -4.08205 / 5.78205, max_relative = 1e-12);
        assert!((pd.kappa().unwrap() + 0.70599).abs() < 1e-5);
        let prolate = MoleculeSpec::new("p", Some(3.0), 1.0, 1.0, [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(prolate.kappa().unwrap(), -1.0);
        let oblate = MoleculeSpec::new("o", Some(3.0), 3.0, 1.0, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(oblate.kappa().unwrap(), 1.0);
        let sph = MoleculeSpec::new("s", Some(1.0), 1.0, 1.0, [0.0, 0.0, 1.0]).unwrap();
        assert!(sph.kappa().is_err());
        assert!(builtin("linear").unwrap().kappa().is_err());
    }

    #[test]
    fn characteristic_distance_of_chf3() {
        let chf3 = builtin("CHF3").unwrap();
        let units = chf3.characteristic_scales();
        // independent SI evaluation: d^2 / (4 pi eps0 h B), cube root
        let d = 1.645 * 3.33564e-30;
        let rb3: f64 = d * d / (1.112_650_056e-10 * 6.62607015e-34 * 10.348e9);
        assert_relative_eq!(units.length_nm, rb3.cbrt() * 1e9, max_relative = 1e-5);
        assert!((units.length_nm - 3.40).abs() < 0.005);
        assert_eq!(units.energy_ghz, 10.348);
    }

    #[test]
    fn doubling_dipole_scales_rb() {
        let a = MoleculeSpec::linear("a", 1.0, 1.0).unwrap().characteristic_scales();
        let b = MoleculeSpec::linear("b", 1.0, 2.0).unwrap().characteristic_scales();
        assert_relative_eq!(b.length_nm / a.length_nm, 2f64.powf(2.0 / 3.0), max_relative = 1e-12);
    }

    #[test]
    fn dimensionless_field_unit() {
        let spec = builtin("CHF3").unwrap();
        let units = spec.characteristic_scales();
        // E = eps * h B / d
        let expected = 4.0 * 6.62607015e-34 * 10.348e9 / (1.645 * DEBYE_SI) * 1e-5;
        assert_relative_eq!(units.field_to_kv_per_cm(4.0), expected, max_relative = 1e-12);
    }

    #[test]
    fn zero_dipole_rejected() {
        assert!(MoleculeSpec::new("z", Some(3.0), 2.0, 1.0, [0.0; 3]).is_err());
    }

    #[test]
    fn rotor_models() {
        let chf3 = builtin("CHF3").unwrap().rotor_model();
        assert!(chf3.conserves_k());
        assert_relative_eq!(chf3.constants[2], 5.6734 / 10.348, max_relative = 1e-15);
        assert_eq!(chf3.dipole_xyz, [0.0, 0.0, 1.0]);
        let pd = builtin("propanediol-R").unwrap().rotor_model();
        assert!(!pd.conserves_k());
        assert!(!pd.has_real_dipole());
        assert_relative_eq!(pd.constants[2], 8.57205 / 3.64, max_relative = 1e-15);
    }

    #[test]
    fn parse_definition_file() {
        let text = "# fluoroform\nname = CHF3\nA_GHz=10.348\nB_GHz=10.348 # same as A\nC_GHz=5.6734\ndc_D=1.645\n";
        let spec = parse_molecule_definition(text).unwrap();
        assert_eq!(spec, builtin("CHF3").unwrap());

        let lin = parse_molecule_definition("name=CaF\nclass=linear\nB_GHz=10.3\nda_D=3.07").unwrap();
        assert_eq!(lin.class, RotorClass::Linear);
        assert_eq!(lin.dipole_xyz(), [0.0, 0.0, 3.07]);

        let err = parse_molecule_definition("B_GHz=1\nfoo=2").unwrap_err();
        assert!(matches!(err, Error::MoleculeFile { line: 2, .. }));
        assert!(parse_molecule_definition("class=oblate\nA_GHz=3\nB_GHz=2\nC_GHz=1\nda_D=1").is_err());
        assert!(parse_molecule_definition("class=linear\nA_GHz=3\nB_GHz=2\nda_D=1").is_err());
    }

    #[test]
    fn unit_round_trip() {
        let units = builtin("propanediol-S").unwrap().characteristic_scales();
        for x in [0.0, 1e-3, 0.7, 12.5, 4e4] {
            assert_relative_eq!(units.energy_from_ghz(units.energy_to_ghz(x)), x, max_relative = 1e-12);
            assert_relative_eq!(units.length_from_nm(units.length_to_nm(x)), x, max_relative = 1e-12);
            assert_relative_eq!(units.field_from_kv_per_cm(units.field_to_kv_per_cm(x)), x, max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn classify_and_kappa_scale_invariant(c in 0.1f64..5.0, db in 0.0f64..1.0, da in 0.0f64..1.0, s in 0.01f64..100.0) {
            let b = c * (1.0 + db);
            let a = b * (1.0 + da);
            let class = classify(Some(a), b, c).unwrap();
            prop_assert_eq!(class, classify(Some(a * s), b * s, c * s).unwrap());
            if a > c * (1.0 + 1e-6) {
                let k1 = MoleculeSpec::new("k", Some(a), b, c, [1.0, 0.0, 0.0]).unwrap().kappa().unwrap();
                let k2 = MoleculeSpec::new("k", Some(a * s), b * s, c * s, [1.0, 0.0, 0.0]).unwrap().kappa().unwrap();
                prop_assert!((k1 - k2).abs() < 1e-10);
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k1));
            }
        }

        #[test]
        fn kappa_monotone_in_b(c in 0.1f64..5.0, span in 0.1f64..5.0, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let a = c + span;
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            prop_assume!(hi - lo > 1e-6);
            let k = |t: f64| {
                let b = c + t * span;
                (2.0 * b - a - c) / (a - c)
            };
            prop_assert!(k(hi) > k(lo));
        }

        #[test]
        fn axis_map_preserves_dipole_norm(da in -3.0f64..3.0, db in -3.0f64..3.0, dc in 0.1f64..3.0) {
            for (a, b, c) in [(3.0, 2.0, 1.0), (3.0, 3.0, 1.0), (3.0, 1.0, 1.0)] {
                let spec = MoleculeSpec::new("m", Some(a), b, c, [da, db, dc]).unwrap();
                prop_assert_eq!(vector_norm(spec.dipole_xyz()), spec.dipole_magnitude());
            }
        }
    }
}
