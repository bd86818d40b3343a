//! Time-harmonic Maxwell scattering `curl E = i omega mu H`,
//! `curl H = -i omega eps E + J` in radially layered media.
//!
//! Each multipole is described by a scalar radial function. For TE,
//! `E = (U/r) X` with `X = e_r x grad_S S`; for TM, `H = (V/r) X`. Inside an
//! isotropic layer both satisfy the Riccati-Bessel equation, with flux
//! `U'/mu` (TE) or `V'/eps` (TM) continuous across interfaces.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::config::{CloakConfig, Variant};
use crate::error::{CloakError, Result};
use crate::geometry::{norm, BlowupMap, Point, RadialMap, Side};
use crate::helmholtz::{angular_eigenvalue, Annulus, ModeKey, NormKind, RadialFn};
use crate::radial::{self, Core, Family, Layer, LayerCoeff, RadialProblem, RadialSolution, RadialSource, SourceFn};
use crate::specfun::{composite_gauss, legendre_angular, riccati, RiccatiKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

/// Vector spherical harmonic pieces of a real angular function at direction `x`.
#[derive(Debug, Clone, Copy)]
pub struct Vsh {
    pub s: f64,
    pub r_hat: [f64; 3],
    /// Surface gradient of `S`.
    pub grad: [f64; 3],
    /// `e_r x grad_S S`.
    pub x: [f64; 3],
}

pub fn vsh(key: &ModeKey, x: &Point) -> Result<Vsh> {
    let r = norm(x, 3);
    if r == 0.0 {
        return Err(CloakError::InvalidInput("vector harmonics at the origin".into()));
    }
    let theta = (x[2] / r).clamp(-1.0, 1.0).acos();
    let phi = x[1].atan2(x[0]);
    let l = legendre_angular(key.n, key.m, theta)?;
    let a = key.m as f64 * phi;
    let (trig, dtrig) = if key.odd { (a.sin(), a.cos()) } else { (a.cos(), -a.sin()) };
    let s = l.p * trig;
    let g_theta = l.dp_dtheta * trig;
    let g_phi = l.p_over_sin * key.m as f64 * dtrig;
    let (st, ct, sp, cp) = (theta.sin(), theta.cos(), phi.sin(), phi.cos());
    let r_hat = [st * cp, st * sp, ct];
    let t_hat = [ct * cp, ct * sp, -st];
    let p_hat = [-sp, cp, 0.0];
    let mut grad = [0.0; 3];
    let mut xv = [0.0; 3];
    for i in 0..3 {
        grad[i] = g_theta * t_hat[i] + g_phi * p_hat[i];
        // e_r x e_theta = e_phi, e_r x e_phi = -e_theta
        xv[i] = g_theta * p_hat[i] - g_phi * t_hat[i];
    }
    Ok(Vsh { s, r_hat, grad, x: xv })
}

// ---------------------------------------------------------------------------
// media

#[derive(Clone)]
pub enum EmCoeff {
    Constant {
        eps: C64,
        mu: C64,
    },
    /// Uniaxial about `e_r`.
    Uniaxial {
        eps_r: RadialFn,
        eps_t: RadialFn,
        mu_r: RadialFn,
        mu_t: RadialFn,
    },
}

impl std::fmt::Debug for EmCoeff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EmCoeff::Constant { eps, mu } => write!(f, "Constant({eps}, {mu})"),
            EmCoeff::Uniaxial { .. } => write!(f, "Uniaxial"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmLayer {
    pub r_in: f64,
    pub r_out: f64,
    pub coeff: EmCoeff,
}

/// Layered medium with vacuum `(1, 1)` beyond the last layer.
#[derive(Debug, Clone)]
pub struct EmLayeredMedium {
    pub layers: Vec<EmLayer>,
    pub map: Option<BlowupMap>,
    pub cloak_rho: Option<f64>,
    pub k_max: f64,
}

impl EmLayeredMedium {
    pub fn vacuum() -> Self {
        Self { layers: Vec::new(), map: None, cloak_rho: None, k_max: 1.0 }
    }

    pub fn exterior_radius(&self) -> f64 {
        self.layers.last().map(|l| l.r_out).unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let mut r = 0.0;
        for l in &self.layers {
            if l.r_in != r || !(l.r_out > l.r_in) || !l.r_out.is_finite() {
                return Err(CloakError::InvalidInput(format!("layer [{}, {}) breaks contiguity", l.r_in, l.r_out)));
            }
            if let EmCoeff::Constant { eps, mu } = l.coeff {
                if !(eps.re > 0.0 && mu.re > 0.0) || eps.im < 0.0 || mu.im < 0.0 {
                    return Err(CloakError::InvalidInput(format!(
                        "layer [{}, {}): need Re > 0 and Im >= 0",
                        l.r_in, l.r_out
                    )));
                }
            }
            r = l.r_out;
        }
        Ok(())
    }

    fn constant_at(&self, r: f64) -> Option<(C64, C64)> {
        match self.layers.iter().find(|l| r >= l.r_in && r < l.r_out) {
            None => Some((C64::new(1.0, 0.0), C64::new(1.0, 0.0))),
            Some(EmLayer { coeff: EmCoeff::Constant { eps, mu }, .. }) => Some((*eps, *mu)),
            Some(_) => None,
        }
    }

    /// Isotropic `(eps, mu)` at physical radius `s`; `None` inside the cloak.
    pub fn physical_coeffs(&self, s: f64) -> Option<(C64, C64)> {
        match &self.map {
            None => self.constant_at(s),
            Some(m) => {
                if (1.0..2.0).contains(&s) {
                    return None;
                }
                let r = m.inverse_radius(s);
                let (e, u) = self.constant_at(r)?;
                let scale = if s < 1.0 { m.rho() } else { 1.0 };
                Some((e * scale, u * scale))
            }
        }
    }
}

fn check_maxwell(config: &CloakConfig, omega: f64) -> Result<()> {
    config.validate()?;
    if !config.variant.is_maxwell() {
        return Err(CloakError::InvalidInput("Maxwell solver given an acoustic variant".into()));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(CloakError::InvalidInput(format!("omega = {omega} must be positive")));
    }
    Ok(())
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn cst(eps: C64, mu: C64) -> EmCoeff {
    EmCoeff::Constant { eps, mu }
}

fn object_k(config: &CloakConfig, omega: f64) -> f64 {
    omega * (config.object.lambda1 * config.object.lambda2).sqrt().max(1.0)
}

/// Pulled-back medium: vacuum outside `B_rho`, `rho^{-1}` times the physical
/// object (and conductive layer) inside.
pub fn assemble_equivalent_medium_em(config: &CloakConfig, omega: f64) -> Result<EmLayeredMedium> {
    check_maxwell(config, omega)?;
    let rho = config.rho;
    let (eo, mo) = (config.object.lambda1, config.object.lambda2);
    let layers = match config.variant {
        Variant::MaxwellNoLoss => vec![EmLayer { r_in: 0.0, r_out: rho, coeff: cst(real(eo / rho), real(mo / rho)) }],
        _ => vec![
            EmLayer { r_in: 0.0, r_out: rho / 2.0, coeff: cst(real(eo / rho), real(mo / rho)) },
            EmLayer { r_in: rho / 2.0, r_out: rho, coeff: cst(C64::new(1.0, 1.0 / omega) / rho, real(1.0 / rho)) },
        ],
    };
    Ok(EmLayeredMedium {
        layers,
        map: Some(BlowupMap::new(rho, 3)?),
        cloak_rho: Some(rho),
        k_max: object_k(config, omega),
    })
}

/// Physical medium with the uniaxial cloak `F_* I` on `[1, 2)`.
pub fn assemble_physical_medium_em(config: &CloakConfig, omega: f64) -> Result<EmLayeredMedium> {
    check_maxwell(config, omega)?;
    let rho = config.rho;
    let map = BlowupMap::new(rho, 3)?;
    let (eo, mo) = (config.object.lambda1, config.object.lambda2);
    let mut layers = match config.variant {
        Variant::MaxwellNoLoss => vec![EmLayer { r_in: 0.0, r_out: 1.0, coeff: cst(real(eo), real(mo)) }],
        _ => vec![
            EmLayer { r_in: 0.0, r_out: 0.5, coeff: cst(real(eo), real(mo)) },
            EmLayer { r_in: 0.5, r_out: 1.0, coeff: cst(C64::new(1.0, 1.0 / omega), real(1.0)) },
        ],
    };
    // eigenvalues of F_* I: phi'/(phi/r)^2 radially, 1/phi' tangentially
    // clamp so that rounding at s = 1 cannot fall onto the inner branch
    let radial: RadialFn = Arc::new(move |s| {
        let r = map.inverse_radius(s).max(rho);
        let (phi, dphi) = map.profile(r, Side::Outer);
        real(dphi / (phi / r).powi(2))
    });
    let tangential: RadialFn = Arc::new(move |s| {
        let r = map.inverse_radius(s).max(rho);
        real(1.0 / map.profile(r, Side::Outer).1)
    });
    layers.push(EmLayer {
        r_in: 1.0,
        r_out: 2.0,
        coeff: EmCoeff::Uniaxial { eps_r: radial.clone(), eps_t: tangential.clone(), mu_r: radial, mu_t: tangential },
    });
    Ok(EmLayeredMedium { layers, map: None, cloak_rho: Some(rho), k_max: object_k(config, omega) })
}

// ---------------------------------------------------------------------------
// currents

#[derive(Clone)]
pub enum CurrentSpec {
    /// Incident `E = p exp(i omega z)` with `p = (cos a, sin a, 0)`.
    PlaneWave { polarization_angle: f64 },
    /// Narrow zonal TM `n = 1` shell of width 0.05 centred at `radius`,
    /// standing in for a radial dipole; unit `L^2` norm.
    ElectricDipole { radius: f64 },
    /// Divergence-free `sin^4` shell: TE `J = c g(r) X`, TM `J = c curl(g(r)/r X)`,
    /// scaled to `||J||_{L^2} = norm`.
    MultipoleShell { key: ModeKey, pol: Polarization, r_in: f64, r_out: f64, norm: f64 },
    /// TE current `J = profile(r) X` on `[r_in, r_out]`, unnormalized.
    TeProfile { key: ModeKey, r_in: f64, r_out: f64, profile: SourceFn },
}

impl std::fmt::Debug for CurrentSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CurrentSpec::PlaneWave { polarization_angle } => write!(f, "PlaneWave({polarization_angle})"),
            CurrentSpec::ElectricDipole { radius } => write!(f, "ElectricDipole({radius})"),
            CurrentSpec::MultipoleShell { key, pol, r_in, r_out, norm } => {
                write!(f, "MultipoleShell({key:?}, {pol:?}, [{r_in}, {r_out}], {norm})")
            }
            CurrentSpec::TeProfile { key, r_in, r_out, .. } => write!(f, "TeProfile({key:?}, [{r_in}, {r_out}])"),
        }
    }
}

/// Radial current profile in physical coordinates.
#[derive(Clone)]
pub enum EmSource {
    /// TE: `J = j(r) X`.
    Tangential { a: f64, b: f64, j: SourceFn },
    /// TM: `J = curl(w(r)/r X)`; `w` and `w'` vanish at both ends.
    /// `w2` is `w''`.
    Poloidal { a: f64, b: f64, w: SourceFn, w2: SourceFn },
}

impl EmSource {
    fn span(&self) -> (f64, f64) {
        match self {
            EmSource::Tangential { a, b, .. } | EmSource::Poloidal { a, b, .. } => (*a, *b),
        }
    }
}

impl std::fmt::Debug for EmSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (a, b) = self.span();
        match self {
            EmSource::Tangential { .. } => write!(f, "Tangential [{a}, {b}]"),
            EmSource::Poloidal { .. } => write!(f, "Poloidal [{a}, {b}]"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmModeData {
    pub n: usize,
    pub pol: Polarization,
    pub keys: Vec<(ModeKey, C64)>,
    pub incident: C64,
    pub sources: Vec<EmSource>,
}

#[derive(Debug, Clone)]
pub struct EmExpansion {
    pub modes: Vec<EmModeData>,
    pub tail_estimate: f64,
    pub warning: Option<String>,
}

fn bump_parts(a: f64, b: f64) -> (SourceFn, SourceFn, SourceFn) {
    let l = b - a;
    let c = PI / l;
    let inside = move |r: f64| r > a && r < b;
    let g: SourceFn = Arc::new(move |r| if inside(r) { real((c * (r - a)).sin().powi(4)) } else { real(0.0) });
    let g1: SourceFn = Arc::new(move |r| {
        if !inside(r) {
            return real(0.0);
        }
        let (s, co) = (c * (r - a)).sin_cos();
        real(4.0 * c * s.powi(3) * co)
    });
    let g2: SourceFn = Arc::new(move |r| {
        if !inside(r) {
            return real(0.0);
        }
        let (s, co) = (c * (r - a)).sin_cos();
        real(c * c * (12.0 * s * s * co * co - 4.0 * s.powi(4)))
    });
    (g, g1, g2)
}

fn shell_norm_te(key: &ModeKey, a: f64, b: f64, j: &SourceFn) -> f64 {
    let lam = angular_eigenvalue(3, key.n);
    let s: f64 = composite_gauss(a, b, 16, 20).into_iter().map(|(r, w)| w * j(r).norm_sqr() * r * r).sum();
    (s * lam * key.norm_sq(3)).sqrt()
}

fn shell_norm_tm(key: &ModeKey, a: f64, b: f64, w: &SourceFn, w1: &SourceFn) -> f64 {
    let lam = angular_eigenvalue(3, key.n);
    let s: f64 = composite_gauss(a, b, 16, 20)
        .into_iter()
        .map(|(r, q)| q * (lam * lam * w(r).norm_sqr() / (r * r) + lam * w1(r).norm_sqr()))
        .sum();
    (s * key.norm_sq(3)).sqrt()
}

/// `L^2` norm of a finite current.
pub fn current_norm(current: &CurrentSpec) -> Result<f64> {
    match current {
        CurrentSpec::MultipoleShell { norm, .. } => Ok(*norm),
        CurrentSpec::ElectricDipole { .. } => Ok(1.0),
        CurrentSpec::TeProfile { key, r_in, r_out, profile } => Ok(shell_norm_te(key, *r_in, *r_out, profile)),
        CurrentSpec::PlaneWave { .. } => Err(CloakError::InvalidInput("plane wave has no finite norm".into())),
    }
}

fn shell_mode(key: ModeKey, pol: Polarization, a: f64, b: f64, target: f64) -> EmModeData {
    let (g, g1, g2) = bump_parts(a, b);
    match pol {
        Polarization::TE => {
            let c = target / shell_norm_te(&key, a, b, &g);
            EmModeData {
                n: key.n,
                pol,
                keys: vec![(key, real(c))],
                incident: real(0.0),
                sources: vec![EmSource::Tangential { a, b, j: g }],
            }
        }
        Polarization::TM => {
            let c = target / shell_norm_tm(&key, a, b, &g, &g1);
            EmModeData {
                n: key.n,
                pol,
                keys: vec![(key, real(c))],
                incident: real(0.0),
                sources: vec![EmSource::Poloidal { a, b, w: g, w2: g2 }],
            }
        }
    }
}

/// Multipole decomposition for orders `1..=n_max`; the tail estimate refers
/// to radius `r_obs`.
pub fn expand_source_em(current: &CurrentSpec, omega: f64, n_max: usize, r_obs: f64) -> Result<EmExpansion> {
    if !(omega > 0.0) {
        return Err(CloakError::InvalidInput(format!("omega = {omega} must be positive")));
    }
    if n_max < 1 {
        return Err(CloakError::InvalidInput("need at least one multipole order".into()));
    }
    let check = |key: &ModeKey, a: f64, b: f64| -> Result<()> {
        if key.n == 0 || key.m > key.n || (key.m == 0 && key.odd) {
            return Err(CloakError::InvalidInput(format!("invalid multipole key {key:?}")));
        }
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return Err(CloakError::InvalidInput(format!("bad current annulus [{a}, {b}]")));
        }
        Ok(())
    };
    let (modes, tail) = match current {
        CurrentSpec::PlaneWave { polarization_angle } => {
            let (sa, ca) = polarization_angle.sin_cos();
            let mut modes = Vec::new();
            for n in 1..=n_max {
                let nf = n as f64;
                let e_n = C64::i().powu(n as u32) * ((2.0 * nf + 1.0) / (nf * (nf + 1.0)));
                let odd = ModeKey { n, m: 1, odd: true };
                let even = ModeKey { n, m: 1, odd: false };
                let k = omega;
                modes.push(EmModeData {
                    n,
                    pol: Polarization::TE,
                    keys: vec![(odd, -e_n * ca / k), (even, e_n * sa / k)],
                    incident: real(1.0),
                    sources: vec![],
                });
                modes.push(EmModeData {
                    n,
                    pol: Polarization::TM,
                    keys: vec![(even, e_n * ca / k), (odd, e_n * sa / k)],
                    incident: real(1.0),
                    sources: vec![],
                });
            }
            let mut tail = 0.0;
            for n in n_max + 1..n_max + 40 {
                let psi = riccati(RiccatiKind::Psi, n, real(omega * r_obs))?;
                tail += (2 * n + 1) as f64 * (psi.value.norm() + psi.derivative.norm()) / (omega * r_obs);
            }
            (modes, tail)
        }
        CurrentSpec::ElectricDipole { radius } => {
            let key = ModeKey::zonal(1);
            check(&key, radius - 0.025, radius + 0.025)?;
            (vec![shell_mode(key, Polarization::TM, radius - 0.025, radius + 0.025, 1.0)], 0.0)
        }
        CurrentSpec::MultipoleShell { key, pol, r_in, r_out, norm } => {
            check(key, *r_in, *r_out)?;
            if key.n > n_max {
                (vec![], f64::INFINITY)
            } else {
                (vec![shell_mode(*key, *pol, *r_in, *r_out, *norm)], 0.0)
            }
        }
        CurrentSpec::TeProfile { key, r_in, r_out, profile } => {
            check(key, *r_in, *r_out)?;
            if key.n > n_max {
                (vec![], f64::INFINITY)
            } else {
                let m = EmModeData {
                    n: key.n,
                    pol: Polarization::TE,
                    keys: vec![(*key, real(1.0))],
                    incident: real(0.0),
                    sources: vec![EmSource::Tangential { a: *r_in, b: *r_out, j: profile.clone() }],
                };
                (vec![m], 0.0)
            }
        }
    };
    let warning = (tail > 1e-8).then(|| format!("orders up to {n_max} leave an estimated tail of {tail:.3e}"));
    Ok(EmExpansion { modes, tail_estimate: tail, warning })
}

/// Radial coefficients of a finite current against `(X, S e_r, grad_S S)`.
#[derive(Clone)]
pub struct CurrentChannels {
    pub key: ModeKey,
    pub pol: Polarization,
    pub r_in: f64,
    pub r_out: f64,
    pub coeffs: Arc<dyn Fn(f64) -> [C64; 3] + Send + Sync>,
}

pub fn current_channels(current: &CurrentSpec) -> Result<CurrentChannels> {
    let (key, pol, a, b) = match current {
        CurrentSpec::MultipoleShell { key, pol, r_in, r_out, .. } => (*key, *pol, *r_in, *r_out),
        CurrentSpec::ElectricDipole { radius } => (ModeKey::zonal(1), Polarization::TM, radius - 0.025, radius + 0.025),
        CurrentSpec::TeProfile { key, r_in, r_out, .. } => (*key, Polarization::TE, *r_in, *r_out),
        CurrentSpec::PlaneWave { .. } => {
            return Err(CloakError::InvalidInput("plane wave is not a finite current".into()))
        }
    };
    // validates the key and support
    expand_source_em(current, 1.0, key.n.max(1), 1.0)?;
    let lam = angular_eigenvalue(3, key.n);
    let z = real(0.0);
    let coeffs: Arc<dyn Fn(f64) -> [C64; 3] + Send + Sync> = match current {
        CurrentSpec::TeProfile { profile, .. } => {
            let p = profile.clone();
            Arc::new(move |r| [p(r), z, z])
        }
        _ => {
            let data = shell_mode(key, pol, a, b, current_norm(current)?);
            let c = data.keys[0].1;
            let (g, g1, _) = bump_parts(a, b);
            match pol {
                Polarization::TE => Arc::new(move |r| [c * g(r), z, z]),
                Polarization::TM => Arc::new(move |r| [z, c * lam * g(r) / (r * r), c * g1(r) / r]),
            }
        }
    };
    Ok(CurrentChannels { key, pol, r_in: a, r_out: b, coeffs })
}

// ---------------------------------------------------------------------------
// solving

#[derive(Debug, Clone)]
pub struct MultipoleSolution {
    pub n: usize,
    pub pol: Polarization,
    pub omega: f64,
    pub keys: Vec<(ModeKey, C64)>,
    pub radial: RadialSolution,
    pub medium: EmLayeredMedium,
}

impl MultipoleSolution {
    /// Radial potential and its derivative in the physical radius.
    pub fn radial_physical(&self, s: f64) -> Result<(C64, C64)> {
        match &self.medium.map {
            None => self.radial.value_and_derivative(s),
            Some(m) => {
                let r = m.inverse_radius(s);
                let (_, dphi) = m.profile(r, Side::Outer);
                let (u, du) = self.radial.value_and_derivative(r)?;
                Ok((u, du / dphi))
            }
        }
    }

    pub fn scattering(&self) -> Result<Vec<(ModeKey, C64)>> {
        let a = self.radial.outgoing_amplitude()?;
        Ok(self.keys.iter().map(|(k, f)| (*k, f * a)).collect())
    }
}

fn em_layers(medium: &EmLayeredMedium, omega: f64, n: usize, pol: Polarization) -> Vec<Layer> {
    let lam = angular_eigenvalue(3, n);
    let w2 = omega * omega;
    let mut layers: Vec<Layer> = medium
        .layers
        .iter()
        .map(|l| {
            let coeff = match &l.coeff {
                EmCoeff::Constant { eps, mu } => {
                    let flux = match pol {
                        Polarization::TE => 1.0 / mu,
                        Polarization::TM => 1.0 / eps,
                    };
                    LayerCoeff::Constant { flux, k: omega * (eps * mu).sqrt() }
                }
                EmCoeff::Uniaxial { eps_r, eps_t, mu_r, mu_t } => {
                    let (a_r, a_t, b_r, b_t) = match pol {
                        Polarization::TE => (mu_r.clone(), mu_t.clone(), eps_r.clone(), eps_t.clone()),
                        Polarization::TM => (eps_r.clone(), eps_t.clone(), mu_r.clone(), mu_t.clone()),
                    };
                    let _ = b_r;
                    LayerCoeff::Profile(Arc::new(move |r| (1.0 / a_t(r), w2 * b_t(r) - lam / (a_r(r) * r * r))))
                }
            };
            Layer { r_in: l.r_in, r_out: l.r_out, coeff }
        })
        .collect();
    layers.push(Layer {
        r_in: medium.exterior_radius(),
        r_out: f64::INFINITY,
        coeff: LayerCoeff::Constant { flux: real(1.0), k: real(omega) },
    });
    layers
}

/// `H`-level radial sources in medium coordinates.
fn em_sources(medium: &EmLayeredMedium, omega: f64, n: usize, sources: &[EmSource]) -> Result<Vec<RadialSource>> {
    let lam = angular_eigenvalue(3, n);
    let mut cuts: Vec<f64> = medium.layers.iter().map(|l| l.r_out).collect();
    cuts.insert(0, 0.0);
    let mut out = Vec::new();
    for src in sources {
        let (a, b) = src.span();
        if a < 2.0 && b > 1.0 && medium.cloak_rho.is_some() {
            return Err(CloakError::InvalidInput(format!("current on [{a}, {b}] overlaps the cloak")));
        }
        let mid = 0.5 * (a + b);
        let Some((eps, _)) = medium.physical_coeffs(mid) else {
            return Err(CloakError::InvalidInput(format!("current on [{a}, {b}] inside a uniaxial layer")));
        };
        let h_phys: SourceFn = match src {
            EmSource::Tangential { j, .. } => {
                let j = j.clone();
                Arc::new(move |s| -C64::i() * omega * s * j(s))
            }
            EmSource::Poloidal { w, w2, .. } => {
                if cuts.iter().any(|&c| c > a && c < b) && medium.map.is_none() {
                    return Err(CloakError::InvalidInput("poloidal current crosses an interface".into()));
                }
                let (w, w2) = (w.clone(), w2.clone());
                Arc::new(move |s| (w2(s) - lam * w(s) / (s * s)) / eps)
            }
        };
        let (ra, rb, h): (f64, f64, SourceFn) = match &medium.map {
            Some(m) if b <= 1.0 => {
                let rho = m.rho();
                (a * rho, b * rho, Arc::new(move |r| h_phys(r / rho) / rho))
            }
            _ => (a, b, h_phys),
        };
        let mut pts = vec![ra];
        pts.extend(cuts.iter().copied().filter(|&c| c > ra && c < rb));
        pts.push(rb);
        for w in pts.windows(2) {
            out.push(RadialSource::Distributed { a: w[0], b: w[1], h: h.clone() });
        }
    }
    Ok(out)
}

pub fn solve_multipole(medium: &EmLayeredMedium, omega: f64, data: &EmModeData) -> Result<MultipoleSolution> {
    medium.validate()?;
    if data.n == 0 {
        return Err(CloakError::InvalidInput("no electromagnetic monopole".into()));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(CloakError::InvalidInput(format!("omega = {omega} must be positive")));
    }
    let problem = RadialProblem {
        family: Family::Riccati,
        order: data.n,
        core: Core::Regular,
        layers: em_layers(medium, omega, data.n, data.pol),
        sources: em_sources(medium, omega, data.n, &data.sources)?,
        incident: data.incident,
    };
    let radial = radial::solve(&problem)?;
    Ok(MultipoleSolution { n: data.n, pol: data.pol, omega, keys: data.keys.clone(), radial, medium: medium.clone() })
}

pub fn solve_multipoles(medium: &EmLayeredMedium, omega: f64, src: &EmExpansion) -> Result<Vec<MultipoleSolution>> {
    src.modes.par_iter().map(|m| solve_multipole(medium, omega, m)).collect()
}

pub fn solve_multipole_direct(config: &CloakConfig, omega: f64, data: &EmModeData) -> Result<MultipoleSolution> {
    solve_multipole(&assemble_physical_medium_em(config, omega)?, omega, data)
}

// ---------------------------------------------------------------------------
// evaluation

type Vec3 = [C64; 3];

fn zero3() -> Vec3 {
    [C64::new(0.0, 0.0); 3]
}

/// Per-key field amplitudes at radius `s`: coefficients of
/// `(E_X, E_r, E_grad, H_X, H_r, H_grad)` against `X`, `S e_r`, `grad_S S`,
/// followed by the same six for `(curl E, curl H)` away from currents.
fn channels(sol: &MultipoleSolution, s: f64, u: C64, du: C64) -> Result<[C64; 12]> {
    let (eps, mu) = sol
        .medium
        .physical_coeffs(s)
        .ok_or_else(|| CloakError::InvalidInput(format!("field requested at r = {s} inside the uniaxial cloak")))?;
    let lam = angular_eigenvalue(3, sol.n);
    let iw = C64::i() * sol.omega;
    let a = u / s;
    let b_r = lam * u / (s * s);
    let b_t = du / s;
    let z = zero();
    let (e, h) = match sol.pol {
        Polarization::TE => ([a, z, z], [z, -b_r / (iw * mu), -b_t / (iw * mu)]),
        Polarization::TM => ([z, b_r / (iw * eps), b_t / (iw * eps)], [a, z, z]),
    };
    let mut out = [z; 12];
    for j in 0..3 {
        out[j] = e[j];
        out[j + 3] = h[j];
        out[j + 6] = iw * mu * h[j];
        out[j + 9] = -iw * eps * e[j];
    }
    Ok(out)
}

/// Channel coefficients of one multipole at physical radius `s`, before the
/// key factors: `(E, H)` then `(curl E, curl H)` against `(X, S e_r, grad_S S)`.
/// The curl part omits currents.
pub fn field_channels(sol: &MultipoleSolution, s: f64) -> Result<[C64; 12]> {
    let (u, du) = sol.radial_physical(s)?;
    channels(sol, s, u, du)
}

/// Squared sphere norms of `X`, `S e_r`, `grad_S S` relative to `||S||^2`.
pub fn channel_weights(n: usize) -> [f64; 3] {
    let lam = angular_eigenvalue(3, n);
    [lam, 1.0, lam]
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn assemble(ch: &[C64], v: &Vsh) -> (Vec3, Vec3) {
    let mut e = zero3();
    let mut h = zero3();
    for i in 0..3 {
        e[i] = ch[0] * v.x[i] + ch[1] * v.s * v.r_hat[i] + ch[2] * v.grad[i];
        h[i] = ch[3] * v.x[i] + ch[4] * v.s * v.r_hat[i] + ch[5] * v.grad[i];
    }
    (e, h)
}

/// Total `(E, H)` at a physical point outside the cloak layer.
pub fn eval_em_field(solutions: &[MultipoleSolution], x: &Point) -> Result<(Vec3, Vec3)> {
    let s = norm(x, 3);
    let mut e = zero3();
    let mut h = zero3();
    for sol in solutions {
        let (u, du) = sol.radial_physical(s)?;
        let ch = channels(sol, s, u, du)?;
        for (key, f) in &sol.keys {
            let (de, dh) = assemble(&ch, &vsh(key, x)?);
            for i in 0..3 {
                e[i] += f * de[i];
                h[i] += f * dh[i];
            }
        }
    }
    Ok((e, h))
}

/// Scattered `(E, H)` outside every layer and current, built from the
/// outgoing amplitudes alone.
pub fn eval_scattered_em(solutions: &[MultipoleSolution], x: &Point) -> Result<(Vec3, Vec3)> {
    let s = norm(x, 3);
    let mut e = zero3();
    let mut h = zero3();
    for sol in solutions {
        let a = sol.radial.outgoing_amplitude()?;
        let xi = riccati(RiccatiKind::Xi, sol.n, real(sol.omega * s))?;
        let (u, du) = (a * xi.value, a * xi.derivative * sol.omega);
        let ch = channels(sol, s, u, du)?;
        for (key, f) in &sol.keys {
            let (de, dh) = assemble(&ch, &vsh(key, x)?);
            for i in 0..3 {
                e[i] += f * de[i];
                h[i] += f * dh[i];
            }
        }
    }
    Ok((e, h))
}

fn cross(a: &Vec3, b: &[f64; 3]) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn vnorm(a: &Vec3) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Deterministic golden-spiral sample directions on the unit sphere.
pub fn sphere_directions(count: usize) -> Vec<Point> {
    let ga = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let t = ga * i as f64;
            [r * t.cos(), r * t.sin(), z]
        })
        .collect()
}

/// `max |H x x - |x| E| + |E x x + |x| H|` over sample points of `|x| = radius`.
pub fn silver_muller_residual_fn(field: impl Fn(&Point) -> Result<(Vec3, Vec3)>, radius: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for d in sphere_directions(64) {
        let x = [d[0] * radius, d[1] * radius, d[2] * radius];
        let (e, h) = field(&x)?;
        let hx = cross(&h, &x);
        let ex = cross(&e, &x);
        let mut a = zero3();
        let mut b = zero3();
        for i in 0..3 {
            a[i] = hx[i] - radius * e[i];
            b[i] = ex[i] + radius * h[i];
        }
        worst = worst.max(vnorm(&a) + vnorm(&b));
    }
    Ok(worst)
}

/// Radiation-condition residual of the scattered field at `radius`.
pub fn silver_muller_residual(solutions: &[MultipoleSolution], radius: f64) -> Result<f64> {
    silver_muller_residual_fn(|x| eval_scattered_em(solutions, x), radius)
}

fn quadrature_nodes(sols: &[&MultipoleSolution], region: Annulus) -> Vec<(f64, f64)> {
    let (a, b) = (region.r_in, region.r_out);
    let mut cuts = vec![a, b, 0.5, 1.0, 2.0];
    let mut k_max: f64 = 1.0;
    for s in sols {
        k_max = k_max.max(s.medium.k_max).max(s.omega);
        for r in s.radial.breakpoints() {
            cuts.push(match &s.medium.map {
                Some(m) => m.map_forward(&[r, 0.0, 0.0])[0],
                None => r,
            });
        }
        let mut t = 0.5;
        while t > 1e-3 {
            cuts.push(t);
            t *= 0.5;
        }
    }
    cuts.retain(|&c| c >= a && c <= b);
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * y.abs().max(1.0));
    let width = (6.0 / k_max).min(0.5);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let panels = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
        out.extend(composite_gauss(w[0], w[1], panels, 20));
    }
    out
}

/// `L^2` or `H(curl)` norm of `sum(plus) - sum(minus)` over an annulus that
/// avoids the cloak layer. The curl terms use `curl E = i omega mu H` and
/// `curl H = -i omega eps E`, so currents inside the region must agree
/// between the two sides.
pub fn em_difference_norm(
    plus: &[MultipoleSolution],
    minus: &[MultipoleSolution],
    region: Annulus,
    kind: NormKind,
) -> Result<f64> {
    if !(region.r_in >= 0.0 && region.r_out > region.r_in && region.r_out.is_finite()) {
        return Err(CloakError::InvalidInput(format!("bad region {region:?}")));
    }
    let all: Vec<(&MultipoleSolution, f64)> =
        plus.iter().map(|s| (s, 1.0)).chain(minus.iter().map(|s| (s, -1.0))).collect();
    let mut groups: BTreeMap<ModeKey, Vec<(usize, C64)>> = BTreeMap::new();
    for (i, (s, sign)) in all.iter().enumerate() {
        for (k, f) in &s.keys {
            groups.entry(*k).or_default().push((i, f * *sign));
        }
    }
    let sols: Vec<&MultipoleSolution> = all.iter().map(|(s, _)| *s).collect();
    if sols.is_empty() {
        return Ok(0.0);
    }
    let nodes = quadrature_nodes(&sols, region);
    let rows: Vec<f64> = nodes
        .par_iter()
        .map(|&(r, w)| -> Result<f64> {
            let chans: Vec<[C64; 12]> = sols
                .iter()
                .map(|s| {
                    let (u, du) = s.radial_physical(r)?;
                    channels(s, r, u, du)
                })
                .collect::<Result<_>>()?;
            let used = if kind == NormKind::H1 { 12 } else { 6 };
            let mut acc = 0.0;
            for (key, members) in &groups {
                let mut c = [zero(); 12];
                for (i, f) in members {
                    for j in 0..used {
                        c[j] += f * chans[*i][j];
                    }
                }
                let wts = channel_weights(key.n);
                let dens: f64 = (0..used).map(|j| wts[j % 3] * c[j].norm_sqr()).sum();
                acc += dens * key.norm_sq(3);
            }
            Ok(acc * w * r * r)
        })
        .collect::<Result<_>>()?;
    Ok(rows.iter().sum::<f64>().sqrt())
}

/// `||(E_c, H_c) - (E, H)||` over the annulus; `NormKind::H1` selects `H(curl)`.
pub fn visibility_norm_em(
    sol_c: &[MultipoleSolution],
    sol_free: &[MultipoleSolution],
    region: Annulus,
    kind: NormKind,
) -> Result<f64> {
    em_difference_norm(sol_c, sol_free, region, kind)
}

pub fn em_field_norm(solutions: &[MultipoleSolution], region: Annulus, kind: NormKind) -> Result<f64> {
    em_difference_norm(solutions, &[], region, kind)
}

/// Radial potentials of both solution sets compared at sample radii in
/// `[r_in, r_out]`, relative to the largest magnitude.
pub fn radial_discrepancy(a: &MultipoleSolution, b: &MultipoleSolution, r_in: f64, r_out: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..=64 {
        let s = r_in + (r_out - r_in) * (i as f64 + 0.5) / 65.0;
        let (ua, _) = a.radial_physical(s)?;
        let (ub, _) = b.radial_physical(s)?;
        worst = worst.max((ua - ub).norm());
        scale = scale.max(ua.norm()).max(ub.norm());
    }
    Ok(if scale == 0.0 { 0.0 } else { worst / scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ObjectParams;

    fn cfg(variant: Variant, rho: f64, e: f64, m: f64) -> CloakConfig {
        CloakConfig::new(3, rho, variant, ObjectParams { lambda1: e, lambda2: m }).unwrap()
    }

    #[test]
    fn equivalent_inclusion_is_scaled() {
        let m = assemble_equivalent_medium_em(&cfg(Variant::MaxwellNoLoss, 0.1, 1.0, 1.0), 1.0).unwrap();
        let EmCoeff::Constant { eps, mu } = m.layers[0].coeff else { panic!() };
        assert!((eps - 10.0).norm() < 1e-12 && (mu - 10.0).norm() < 1e-12);
        let l = assemble_equivalent_medium_em(&cfg(Variant::MaxwellLossy, 0.1, 2.0, 3.0), 2.0).unwrap();
        let EmCoeff::Constant { eps, mu } = l.layers[1].coeff else { panic!() };
        assert!((eps - C64::new(10.0, 5.0)).norm() < 1e-12 && (mu - 10.0).norm() < 1e-12);
    }

    #[test]
    fn interior_current_scaling() {
        // rho^{-2} J(x / rho): a unit profile becomes 100 on B_0.1
        let rho = 0.1;
        let m = assemble_equivalent_medium_em(&cfg(Variant::MaxwellNoLoss, rho, 2.0, 2.0), 1.0).unwrap();
        let one: SourceFn = Arc::new(|_| real(1.0));
        let src = em_sources(&m, 1.0, 1, &[EmSource::Tangential { a: 0.2, b: 0.8, j: one }]).unwrap();
        let RadialSource::Distributed { a, b, h } = &src[0] else { panic!() };
        assert!((a - 0.02).abs() < 1e-15 && (b - 0.08).abs() < 1e-15);
        // h = -i omega r j_eq(r)
        let r = 0.05;
        let j_eq = h(r) / (-C64::i() * r);
        assert!((j_eq - 100.0).norm() < 1e-10);
    }

    #[test]
    fn vacuum_plane_wave() {
        let omega = 1.3;
        for alpha in [0.0, 0.7] {
            let src = expand_source_em(&CurrentSpec::PlaneWave { polarization_angle: alpha }, omega, 30, 2.0).unwrap();
            let sols = solve_multipoles(&EmLayeredMedium::vacuum(), omega, &src).unwrap();
            for s in &sols {
                assert!(s.radial.outgoing_amplitude().unwrap().norm() < 1e-12);
            }
            let p = [alpha.cos(), alpha.sin(), 0.0];
            let q = [-alpha.sin(), alpha.cos(), 0.0];
            for x in [[0.3, -0.4, 0.5], [1.2, 0.1, -0.7], [0.0, 0.0, 1.5], [-0.9, 1.1, 0.2]] {
                let (e, h) = eval_em_field(&sols, &x).unwrap();
                let ph = C64::from_polar(1.0, omega * x[2]);
                for i in 0..3 {
                    assert!((e[i] - p[i] * ph).norm() < 1e-9, "E {x:?} {i}: {}", e[i]);
                    assert!((h[i] - q[i] * ph).norm() < 1e-9, "H {x:?} {i}: {}", h[i]);
                }
            }
        }
    }

    #[test]
    fn curl_identities_by_finite_differences() {
        use rand::{Rng, SeedableRng};
        let omega = 1.1;
        let c = cfg(Variant::MaxwellNoLoss, 0.2, 2.0, 1.5);
        let m = assemble_equivalent_medium_em(&c, omega).unwrap();
        let src = expand_source_em(&CurrentSpec::PlaneWave { polarization_angle: 0.3 }, omega, 12, 4.0).unwrap();
        let sols = solve_multipoles(&m, omega, &src).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let h = 1e-4;
        for _ in 0..100 {
            let dir = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0f64)];
            let rad = rng.gen_range(2.2..3.8);
            let nd = norm(&dir, 3).max(1e-3);
            let x = [dir[0] / nd * rad, dir[1] / nd * rad, dir[2] / nd * rad];
            let f = |p: &Point| eval_em_field(&sols, p).unwrap();
            let mut jac_e = [[zero(); 3]; 3];
            let mut jac_h = [[zero(); 3]; 3];
            for j in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let (ep, hp) = f(&xp);
                let (em, hm) = f(&xm);
                for i in 0..3 {
                    jac_e[i][j] = (ep[i] - em[i]) / (2.0 * h);
                    jac_h[i][j] = (hp[i] - hm[i]) / (2.0 * h);
                }
            }
            let curl = |jm: &[[C64; 3]; 3]| [jm[2][1] - jm[1][2], jm[0][2] - jm[2][0], jm[1][0] - jm[0][1]];
            let (e, hh) = f(&x);
            let ce = curl(&jac_e);
            let ch = curl(&jac_h);
            for i in 0..3 {
                assert!((ce[i] - C64::i() * omega * hh[i]).norm() < 1e-6);
                assert!((ch[i] + C64::i() * omega * e[i]).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn dielectric_ball_unitarity() {
        let omega = 1.4;
        let ball = EmLayeredMedium {
            layers: vec![EmLayer { r_in: 0.0, r_out: 1.0, coeff: cst(real(3.0), real(1.0)) }],
            map: None,
            cloak_rho: None,
            k_max: omega * 3f64.sqrt(),
        };
        for n in 1..10 {
            for pol in [Polarization::TE, Polarization::TM] {
                let data = EmModeData {
                    n,
                    pol,
                    keys: vec![(ModeKey::zonal(n), real(1.0))],
                    incident: real(1.0),
                    sources: vec![],
                };
                let a = solve_multipole(&ball, omega, &data).unwrap().radial.outgoing_amplitude().unwrap();
                assert!(((1.0 + 2.0 * a).norm() - 1.0).abs() < 1e-9, "n = {n} {pol:?}");
            }
        }
    }

    #[test]
    fn pullback_matches_direct() {
        let omega = 1.0;
        for variant in [Variant::MaxwellNoLoss, Variant::MaxwellLossy] {
            let c = cfg(variant, 0.1, 2.0, 2.0);
            let eq = assemble_equivalent_medium_em(&c, omega).unwrap();
            for n in 1..=6 {
                for pol in [Polarization::TE, Polarization::TM] {
                    let key = ModeKey::zonal(n);
                    let shell = shell_mode(key, pol, 2.5, 3.5, 1.0);
                    let a = solve_multipole(&eq, omega, &shell).unwrap();
                    let b = solve_multipole_direct(&c, omega, &shell).unwrap();
                    let d = radial_discrepancy(&a, &b, 1.0, 4.0).unwrap();
                    assert!(d < 1e-7, "n = {n} {pol:?}: {d}");
                    let inside = radial_discrepancy(&a, &b, 0.05, 0.95).unwrap();
                    assert!(inside < 1e-7, "interior n = {n} {pol:?}: {inside}");
                }
            }
        }
    }

    #[test]
    fn shell_norms_and_passthrough() {
        let key = ModeKey { n: 2, m: 1, odd: false };
        for pol in [Polarization::TE, Polarization::TM] {
            let e = expand_source_em(
                &CurrentSpec::MultipoleShell { key, pol, r_in: 2.5, r_out: 3.5, norm: 2.0 },
                1.0,
                5,
                4.0,
            )
            .unwrap();
            assert_eq!(e.modes.len(), 1);
            assert_eq!(e.modes[0].keys[0].0, key);
        }
        // closed-form TE norm of a constant profile on [0, 1]
        let key = ModeKey::zonal(1);
        let one: SourceFn = Arc::new(|_| real(1.0));
        let got = current_norm(&CurrentSpec::TeProfile { key, r_in: 0.0, r_out: 1.0, profile: one }).unwrap();
        let expect = (2.0 * key.norm_sq(3) / 3.0).sqrt();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn poloidal_current_is_divergence_free_and_consistent() {
        // curl H = -i omega E + J: check by finite differences inside the shell
        let omega = 1.2;
        let key = ModeKey { n: 2, m: 1, odd: true };
        let (a, b) = (2.5, 3.5);
        let data = shell_mode(key, Polarization::TM, a, b, 1.0);
        let c = data.keys[0].1;
        let sol = solve_multipole(&EmLayeredMedium::vacuum(), omega, &data).unwrap();
        let (g, g1, _) = bump_parts(a, b);
        let lam = angular_eigenvalue(3, 2);
        let current = |x: &Point| -> Vec3 {
            let s = norm(x, 3);
            let v = vsh(&key, x).unwrap();
            std::array::from_fn(|i| -c * (lam * g(s) / (s * s) * v.s * v.r_hat[i] + g1(s) / s * v.grad[i]))
        };
        // E from (V - w) inside the shell
        let field = |x: &Point| -> (Vec3, Vec3) {
            let s = norm(x, 3);
            let (u, du) = sol.radial_physical(s).unwrap();
            let (w, w1) = (g(s), g1(s));
            let ch = channels(&sol, s, u, du).unwrap();
            let iw = C64::i() * omega;
            let mut chj = ch;
            chj[1] = lam * (u - w) / (s * s) / iw;
            chj[2] = (du - w1) / s / iw;
            let (e, h) = assemble(&chj, &vsh(&key, x).unwrap());
            (e.map(|v| v * c), h.map(|v| v * c))
        };
        let h = 1e-4;
        for x in [[1.0, 2.0, 1.5], [-2.0, 0.5, 2.2], [0.3, -2.8, -1.0]] {
            let mut jac = [[zero(); 3]; 3];
            let mut div = zero();
            for j in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let (_, hp) = field(&xp);
                let (_, hm) = field(&xm);
                div += (current(&xp)[j] - current(&xm)[j]) / (2.0 * h);
                for i in 0..3 {
                    jac[i][j] = (hp[i] - hm[i]) / (2.0 * h);
                }
            }
            assert!(div.norm() < 1e-6);
            let curl = [jac[2][1] - jac[1][2], jac[0][2] - jac[2][0], jac[1][0] - jac[0][1]];
            let (e, _) = field(&x);
            let j = current(&x);
            for i in 0..3 {
                assert!((curl[i] - (-C64::i() * omega * e[i] + j[i])).norm() < 1e-6, "{x:?}");
            }
        }
    }

    #[test]
    fn radiation_condition() {
        let omega = 1.0;
        let c = cfg(Variant::MaxwellNoLoss, 0.3, 4.0, 1.0);
        let m = assemble_equivalent_medium_em(&c, omega).unwrap();
        let src = expand_source_em(&CurrentSpec::PlaneWave { polarization_angle: 0.0 }, omega, 6, 4.0).unwrap();
        let sols = solve_multipoles(&m, omega, &src).unwrap();
        let r1 = silver_muller_residual(&sols, 20.0).unwrap() * 20.0;
        let r2 = silver_muller_residual(&sols, 40.0).unwrap() * 40.0;
        assert!(r1 > 0.0 && r2 < 1.5 * r1, "{r1} {r2}");
        // incoming waves violate the condition
        let incoming = |x: &Point| -> Result<(Vec3, Vec3)> {
            let (e, h) = eval_scattered_em(&sols, x)?;
            let conj = |v: Vec3| v.map(|c| c.conj());
            Ok((conj(e), conj(h).map(|c| -c)))
        };
        let i1 = silver_muller_residual_fn(incoming, 20.0).unwrap();
        let i2 = silver_muller_residual_fn(incoming, 40.0).unwrap();
        assert!(i2 > 0.5 * i1 && i1 > 10.0 * r1 / 20.0, "{i1} {i2}");
        // a plane wave alone grows like R
        let pw = solve_multipoles(
            &EmLayeredMedium::vacuum(),
            omega,
            &expand_source_em(&CurrentSpec::PlaneWave { polarization_angle: 0.0 }, omega, 60, 20.0).unwrap(),
        )
        .unwrap();
        let p1 = silver_muller_residual_fn(|x| eval_em_field(&pw, x), 10.0).unwrap();
        let p2 = silver_muller_residual_fn(|x| eval_em_field(&pw, x), 20.0).unwrap();
        assert!(p2 > 1.5 * p1, "{p1} {p2}");
    }

    #[test]
    fn visibility_identical_is_zero() {
        let omega = 1.0;
        let src = expand_source_em(&CurrentSpec::ElectricDipole { radius: 3.0 }, omega, 4, 4.0).unwrap();
        let free = solve_multipoles(&EmLayeredMedium::vacuum(), omega, &src).unwrap();
        assert_eq!(visibility_norm_em(&free, &free, Annulus::new(2.0, 4.0), NormKind::H1).unwrap(), 0.0);
        let m = assemble_equivalent_medium_em(&cfg(Variant::MaxwellNoLoss, 0.1, 1.0, 1.0), omega).unwrap();
        let cl = solve_multipoles(&m, omega, &src).unwrap();
        assert!(visibility_norm_em(&cl, &free, Annulus::new(2.0, 4.0), NormKind::H1).unwrap() > 0.0);
    }

    #[test]
    fn zero_current_gives_zero_field() {
        let m = assemble_equivalent_medium_em(&cfg(Variant::MaxwellNoLoss, 0.1, 2.0, 1.0), 1.0).unwrap();
        let data = EmModeData {
            n: 1,
            pol: Polarization::TE,
            keys: vec![(ModeKey::zonal(1), real(1.0))],
            incident: real(0.0),
            sources: vec![],
        };
        let s = solve_multipole(&m, 1.0, &data).unwrap();
        let s = [s];
        assert_eq!(em_field_norm(&s, Annulus::new(0.0, 1.0), NormKind::L2).unwrap(), 0.0);
        assert_eq!(em_field_norm(&s, Annulus::new(2.0, 4.0), NormKind::H1).unwrap(), 0.0);
        assert!(em_field_norm(&s, Annulus::new(0.5, 3.0), NormKind::L2).is_err());
    }
}
