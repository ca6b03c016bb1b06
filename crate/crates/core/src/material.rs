//! Material constants of graphene and the reduction of each phonon channel
//! to a mode triple `(C, a, b)`.
//!
//! Everything here is stored in SI units. The JSON parameter file uses eV for
//! energies (and eV/m for the optical coupling constants); conversion happens
//! once, in [`PhysicalParams::from_file`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{BgkError, Result};

/// Elementary charge in coulomb; also the joule value of one electronvolt.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Joules per electronvolt.
pub const EV: f64 = ELEMENTARY_CHARGE;

/// Numerically stable logistic function `1 / (1 + exp(-x))`.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Physical constants of the model, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Fermi velocity, m/s.
    pub v_f: f64,
    /// Thermal energy `k_B T` of the lattice, J.
    pub k_b_t: f64,
    /// Elementary charge, C.
    pub e_charge: f64,
    /// Acoustic deformation potential, J.
    pub d_ac: f64,
    /// Sound speed, m/s.
    pub v_p: f64,
    /// Areal mass density, kg/m^2.
    pub sigma_m: f64,
    /// Optical (LO/TO) coupling constant, J/m.
    pub d_o: f64,
    /// Optical phonon angular frequency, 1/s.
    pub omega_o: f64,
    /// K-phonon coupling constant, J/m.
    pub d_k: f64,
    /// K-phonon angular frequency, 1/s.
    pub omega_k: f64,
}

/// On-disk parameter file. Energies in eV, everything else SI.
///
/// `D_ac_eV_per_m` keeps its historical key name; its value is the acoustic
/// deformation potential in eV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    #[serde(rename = "hbar_eVs")]
    pub hbar_ev_s: f64,
    #[serde(rename = "v_F")]
    pub v_f: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(rename = "D_ac_eV_per_m")]
    pub d_ac: f64,
    pub v_p: f64,
    pub sigma_m: f64,
    #[serde(rename = "D_O")]
    pub d_o: f64,
    #[serde(rename = "omega_O")]
    pub omega_o: f64,
    #[serde(rename = "D_K")]
    pub d_k: f64,
    #[serde(rename = "omega_K")]
    pub omega_k: f64,
}

const PARAM_KEYS: [&str; 10] = [
    "hbar_eVs",
    "v_F",
    "T",
    "D_ac_eV_per_m",
    "v_p",
    "sigma_m",
    "D_O",
    "omega_O",
    "D_K",
    "omega_K",
];

impl ParamsFile {
    /// Parses the JSON text of a parameter file. Unknown keys are rejected by name.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| BgkError::ParamsFormat(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| BgkError::ParamsFormat("top level must be a JSON object".into()))?;
        if let Some(key) = obj.keys().find(|k| !PARAM_KEYS.contains(&k.as_str())) {
            return Err(BgkError::UnknownKey(key.clone()));
        }
        serde_json::from_value(value).map_err(|e| BgkError::ParamsFormat(e.to_string()))
    }

    /// Literature values for suspended graphene at 300 K.
    pub fn literature_default() -> Self {
        let hbar_ev_s = 6.582_119_569e-16;
        ParamsFile {
            hbar_ev_s,
            v_f: 1.0e6,
            temperature: 300.0,
            d_ac: 6.8,
            v_p: 2.0e4,
            sigma_m: 7.6e-7,
            d_o: 1.0e11,
            omega_o: 0.1646 / hbar_ev_s,
            d_k: 3.5e10,
            omega_k: 0.124 / hbar_ev_s,
        }
    }
}

impl PhysicalParams {
    /// Converts a parameter file to SI and validates it.
    pub fn from_file(file: &ParamsFile) -> Result<Self> {
        let params = PhysicalParams {
            hbar: file.hbar_ev_s * EV,
            v_f: file.v_f,
            k_b_t: BOLTZMANN * file.temperature,
            e_charge: ELEMENTARY_CHARGE,
            d_ac: file.d_ac * EV,
            v_p: file.v_p,
            sigma_m: file.sigma_m,
            d_o: file.d_o * EV,
            omega_o: file.omega_o,
            d_k: file.d_k * EV,
            omega_k: file.omega_k,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&ParamsFile::from_json(text)?)
    }

    pub fn literature_default() -> Self {
        Self::from_file(&ParamsFile::literature_default()).expect("default parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("hbar", self.hbar),
            ("v_F", self.v_f),
            ("k_B_T", self.k_b_t),
            ("e_charge", self.e_charge),
            ("D_ac", self.d_ac),
            ("v_p", self.v_p),
            ("sigma_m", self.sigma_m),
            ("D_O", self.d_o),
            ("omega_O", self.omega_o),
            ("D_K", self.d_k),
            ("omega_K", self.omega_k),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(BgkError::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.v_p >= self.v_f {
            log::warn!(
                "sound speed v_p = {} m/s is not below the Fermi velocity v_F = {} m/s",
                self.v_p,
                self.v_f
            );
        }
        Ok(())
    }

    /// `hbar * v_F`, the slope of the Dirac cone in J m.
    #[inline]
    pub fn hbar_vf(&self) -> f64 {
        self.hbar * self.v_f
    }

    /// Band energy `hbar v_F |k|` of a wavevector magnitude.
    pub fn dispersion(&self, k_magnitude: f64) -> Result<f64> {
        if !(k_magnitude >= 0.0) {
            return Err(BgkError::domain(
                "dispersion",
                format!("wavevector magnitude must be >= 0, got {k_magnitude}"),
            ));
        }
        Ok(self.hbar_vf() * k_magnitude)
    }

    /// Fermi-Dirac occupancy of energy `eps` at chemical potential `mu`.
    /// Saturates cleanly to 0 or 1.
    #[inline]
    pub fn fermi_dirac(&self, eps: f64, mu: f64) -> f64 {
        logistic(-(eps - mu) / self.k_b_t)
    }

    /// Bose-Einstein occupation of a phonon with energy quantum `hbar_omega`.
    pub fn bose_einstein(&self, hbar_omega: f64) -> Result<f64> {
        if !(hbar_omega > 0.0) {
            return Err(BgkError::domain(
                "bose_einstein",
                format!("phonon energy must be > 0, got {hbar_omega}"),
            ));
        }
        Ok(1.0 / (hbar_omega / self.k_b_t).exp_m1())
    }
}

/// Angular dependence `G(cos t) = prefactor * (constant + cosine * cos t)` of a
/// squared scattering matrix element, with all rate prefactors included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularShape {
    pub prefactor: f64,
    pub constant: f64,
    pub cosine: f64,
}

impl AngularShape {
    #[inline]
    pub fn eval(&self, cos_theta: f64) -> f64 {
        self.prefactor * (self.constant + self.cosine * cos_theta)
    }
}

/// One phonon channel reduced to its angular coefficient `c`, phonon
/// occupation `occupation` and energy quantum `quantum` (J).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringMode {
    pub label: String,
    /// Integral of the angular shape over a full turn, J m^2 / s.
    pub c: f64,
    pub occupation: f64,
    pub quantum: f64,
    pub elastic: bool,
    /// Unintegrated angular shape; consumed only by the reference oracles.
    pub shape: AngularShape,
}

impl ScatteringMode {
    /// A mode given directly by its triple. The angular shape is taken isotropic.
    pub fn synthetic(label: &str, c: f64, occupation: f64, quantum: f64) -> Result<Self> {
        let mode = ScatteringMode {
            label: label.to_string(),
            c,
            occupation,
            quantum,
            elastic: occupation == 0.0 && quantum == 0.0,
            shape: AngularShape {
                prefactor: c / (2.0 * PI),
                constant: 1.0,
                cosine: 0.0,
            },
        };
        mode.validate()?;
        Ok(mode)
    }

    /// Inelastic mode whose occupation is the thermal Bose-Einstein value.
    pub fn thermal(label: &str, c: f64, quantum: f64, params: &PhysicalParams) -> Result<Self> {
        Self::synthetic(label, c, params.bose_einstein(quantum)?, quantum)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(BgkError::param(&self.label, format!("C must be > 0, got {}", self.c)));
        }
        if !(self.occupation.is_finite() && self.occupation >= 0.0) {
            return Err(BgkError::param(
                &self.label,
                format!("occupation must be >= 0, got {}", self.occupation),
            ));
        }
        if !(self.quantum.is_finite() && self.quantum >= 0.0) {
            return Err(BgkError::param(
                &self.label,
                format!("energy quantum must be >= 0, got {}", self.quantum),
            ));
        }
        if self.elastic && (self.occupation != 0.0 || self.quantum != 0.0) {
            return Err(BgkError::param(&self.label, "elastic modes carry a = 0 and b = 0"));
        }
        Ok(())
    }
}

/// Acoustic (elastic), combined LO+TO, and K-phonon channels.
pub fn build_modes(params: &PhysicalParams) -> Result<Vec<ScatteringMode>> {
    params.validate()?;
    let p = params;
    let norm = 1.0 / (4.0 * PI * PI);

    // 2 n_q |G_ac|^2, the 2 n_q factor folded in; the cosine integrates to zero.
    let acoustic = ScatteringMode {
        label: "acoustic".into(),
        c: p.d_ac * p.d_ac * p.k_b_t / (4.0 * p.hbar * p.sigma_m * p.v_p * p.v_p),
        occupation: 0.0,
        quantum: 0.0,
        elastic: true,
        shape: AngularShape {
            prefactor: norm * PI * p.d_ac * p.d_ac * p.k_b_t / (2.0 * p.hbar * p.sigma_m * p.v_p * p.v_p),
            constant: 1.0,
            cosine: 1.0,
        },
    };

    // omega_LO = omega_TO, so the angle-sum cosines of the two rates cancel.
    let hw_o = p.hbar * p.omega_o;
    let optical = ScatteringMode {
        label: "optical".into(),
        c: p.d_o * p.d_o / (p.sigma_m * p.omega_o),
        occupation: p.bose_einstein(hw_o)?,
        quantum: hw_o,
        elastic: false,
        shape: AngularShape {
            prefactor: norm * PI * p.d_o * p.d_o / (p.sigma_m * p.omega_o),
            constant: 2.0,
            cosine: 0.0,
        },
    };

    let hw_k = p.hbar * p.omega_k;
    let k_phonon = ScatteringMode {
        label: "K".into(),
        c: p.d_k * p.d_k / (p.sigma_m * p.omega_k),
        occupation: p.bose_einstein(hw_k)?,
        quantum: hw_k,
        elastic: false,
        shape: AngularShape {
            prefactor: norm * 2.0 * PI * p.d_k * p.d_k / (p.sigma_m * p.omega_k),
            constant: 1.0,
            cosine: -1.0,
        },
    };

    let modes = vec![acoustic, optical, k_phonon];
    for m in &modes {
        m.validate()?;
    }
    Ok(modes)
}
