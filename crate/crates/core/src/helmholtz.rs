//! Time-harmonic acoustic scattering `div(A grad u) + omega^2 Sigma u = f`
//! in radially layered media, solved mode by mode.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::config::{CloakConfig, Variant};
use crate::error::{CloakError, Result};
use crate::geometry::{norm, pushforward_coeffs, BlowupMap, Point, RadialMap, Side};
use crate::radial::{self, Core, Family, Layer, LayerCoeff, RadialProblem, RadialSolution, RadialSource, SourceFn};
use crate::specfun::{composite_gauss, legendre_angular, sph_angular_norm_sq};

/// Real function of the medium radius.
pub type RadialFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Real angular harmonic. In 3D `P_n^m(cos theta) cos(m phi)` (or `sin` when
/// `odd`); in 2D `cos(n theta)` / `sin(n theta)` and `m` is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeKey {
    pub n: usize,
    pub m: usize,
    pub odd: bool,
}

impl ModeKey {
    pub fn zonal(n: usize) -> Self {
        Self { n, m: 0, odd: false }
    }

    /// Every key of order `n`.
    pub fn all(dimension: usize, n: usize) -> Vec<ModeKey> {
        if dimension == 2 {
            let mut v = vec![ModeKey { n, m: n, odd: false }];
            if n > 0 {
                v.push(ModeKey { n, m: n, odd: true });
            }
            return v;
        }
        let mut v = Vec::with_capacity(2 * n + 1);
        for m in 0..=n {
            v.push(ModeKey { n, m, odd: false });
            if m > 0 {
                v.push(ModeKey { n, m, odd: true });
            }
        }
        v
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        let bad_2d = dimension == 2 && self.n == 0 && self.odd;
        let bad_3d = dimension == 3 && (self.m > self.n || (self.m == 0 && self.odd));
        if bad_2d || bad_3d {
            return Err(CloakError::InvalidInput(format!("invalid mode key {self:?}")));
        }
        Ok(())
    }

    /// Value at the direction of `x` (need not be normalized).
    pub fn angular(&self, dimension: usize, x: &Point) -> f64 {
        if dimension == 2 {
            let t = x[1].atan2(x[0]);
            let a = self.n as f64 * t;
            return if self.odd { a.sin() } else { a.cos() };
        }
        let r = norm(x, 3);
        if r == 0.0 {
            return if self.n == 0 { 1.0 } else { 0.0 };
        }
        let theta = (x[2] / r).clamp(-1.0, 1.0).acos();
        let phi = x[1].atan2(x[0]);
        let p = legendre_angular(self.n, self.m, theta).map(|l| l.p).unwrap_or(0.0);
        let a = self.m as f64 * phi;
        p * if self.odd { a.sin() } else { a.cos() }
    }

    /// Squared norm over the unit sphere (or circle).
    pub fn norm_sq(&self, dimension: usize) -> f64 {
        if dimension == 2 {
            return if self.n == 0 { 2.0 * PI } else { PI };
        }
        sph_angular_norm_sq(self.n, self.m)
    }
}

/// Eigenvalue of the angular Laplacian: `n(n+1)` in 3D, `n^2` in 2D.
pub fn angular_eigenvalue(dimension: usize, n: usize) -> f64 {
    let n = n as f64;
    if dimension == 3 {
        n * (n + 1.0)
    } else {
        n * n
    }
}

fn family(dimension: usize) -> Family {
    if dimension == 3 {
        Family::Spherical
    } else {
        Family::Cylindrical
    }
}

// ---------------------------------------------------------------------------
// media

#[derive(Clone)]
pub enum MediumCoeff {
    /// Isotropic `(A, Sigma) = (alpha I, beta)`.
    Constant { alpha: C64, beta: C64 },
    /// Radially anisotropic `A = a_r e_r e_r + a_t (I - e_r e_r)`, `Sigma = s`.
    Profile { a_r: RadialFn, a_t: RadialFn, s: RadialFn },
}

impl std::fmt::Debug for MediumCoeff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MediumCoeff::Constant { alpha, beta } => write!(f, "Constant({alpha}, {beta})"),
            MediumCoeff::Profile { .. } => write!(f, "Profile"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MediumLayer {
    pub r_in: f64,
    pub r_out: f64,
    pub coeff: MediumCoeff,
}

/// Radially layered medium with background `(1, 1)` beyond the last layer.
#[derive(Debug, Clone)]
pub struct LayeredMedium {
    pub dimension: usize,
    pub core: Core,
    /// Start of the first layer; nonzero only for a Dirichlet core.
    pub inner_radius: f64,
    pub layers: Vec<MediumLayer>,
    /// Set when the medium lives in the blown-up coordinates of a cloak:
    /// physical radius `s` corresponds to medium radius `F^{-1}(s)`.
    pub map: Option<BlowupMap>,
    /// Cloak parameter, used to grade quadrature near the cloak's inner edge.
    pub cloak_rho: Option<f64>,
    /// Largest wavenumber in physical coordinates, used to size quadrature panels.
    pub k_max: f64,
}

impl LayeredMedium {
    pub fn homogeneous(dimension: usize, omega: f64) -> Self {
        Self {
            dimension,
            core: Core::Regular,
            inner_radius: 0.0,
            layers: Vec::new(),
            map: None,
            cloak_rho: None,
            k_max: omega,
        }
    }

    /// Sound-soft ball of the given radius in free space.
    pub fn dirichlet(dimension: usize, radius: f64, omega: f64) -> Self {
        Self { core: Core::Dirichlet, inner_radius: radius, ..Self::homogeneous(dimension, omega) }
    }

    pub fn exterior_radius(&self) -> f64 {
        self.layers.last().map(|l| l.r_out).unwrap_or(self.inner_radius)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 2 && self.dimension != 3 {
            return Err(CloakError::InvalidInput(format!("dimension {}", self.dimension)));
        }
        if self.core == Core::Regular && self.inner_radius != 0.0 {
            return Err(CloakError::InvalidInput("regular core must start at the origin".into()));
        }
        if self.core == Core::Dirichlet && !(self.inner_radius > 0.0) {
            return Err(CloakError::InvalidInput("Dirichlet core needs a positive radius".into()));
        }
        let mut r = self.inner_radius;
        for l in &self.layers {
            if l.r_in != r || !(l.r_out > l.r_in) || !l.r_out.is_finite() {
                return Err(CloakError::InvalidInput(format!(
                    "layer [{}, {}) breaks contiguity at {r}",
                    l.r_in, l.r_out
                )));
            }
            if let MediumCoeff::Constant { alpha, beta } = l.coeff {
                if !(alpha.re > 0.0) || beta.im < 0.0 {
                    return Err(CloakError::InvalidInput(format!(
                        "layer [{}, {}): need Re alpha > 0 and Im beta >= 0",
                        l.r_in, l.r_out
                    )));
                }
            }
            r = l.r_out;
        }
        Ok(())
    }

    fn constant_at(&self, r: f64) -> bool {
        let hit = self.layers.iter().find(|l| r >= l.r_in && r <= l.r_out);
        !matches!(hit.map(|l| &l.coeff), Some(MediumCoeff::Profile { .. }))
    }
}

fn check_acoustic(config: &CloakConfig, omega: f64) -> Result<()> {
    config.validate()?;
    if config.variant.is_maxwell() {
        return Err(CloakError::InvalidInput("acoustic solver given a Maxwell variant".into()));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(CloakError::InvalidInput(format!("omega = {omega} must be positive")));
    }
    Ok(())
}

fn cst(alpha: f64, beta: C64) -> MediumCoeff {
    MediumCoeff::Constant { alpha: C64::new(alpha, 0.0), beta }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Drude-Lorentz coefficient `sigma_N / (omega_c^2 - omega^2 - i sigma_D omega)`.
pub fn drude_lorentz_coeff(sigma_n: f64, sigma_d: f64, omega_c: f64, omega: f64) -> C64 {
    sigma_n / C64::new(omega_c * omega_c - omega * omega, -sigma_d * omega)
}

/// Lossy-layer scalar in the layer's own (unscaled) coordinates.
fn lossy_scalar(config: &CloakConfig, omega: f64) -> Option<C64> {
    match config.variant {
        Variant::FixedLossy | Variant::DrudeLorentz { .. } => Some(C64::new(1.0, 1.0 / omega)),
        Variant::RhoLossy { gamma } => {
            let lambda = config.rho.powf(1.0 + gamma);
            Some(C64::new(1.0, 1.0 / (omega * config.rho * lambda)))
        }
        _ => None,
    }
}

fn drude_term(config: &CloakConfig, omega: f64) -> Option<C64> {
    match config.variant {
        Variant::DrudeLorentz { sigma_n, sigma_d, .. } => {
            Some(drude_lorentz_coeff(sigma_n, sigma_d, config.omega_c()?, omega))
        }
        _ => None,
    }
}

fn object_wavenumber(config: &CloakConfig, omega: f64) -> f64 {
    let o = config.object;
    omega * (o.lambda2 / o.lambda1).sqrt().max(1.0)
}

/// Medium of the equivalent problem obtained by pulling the physical cloak
/// back through the blow-up map: everything outside `B_rho` is background
/// (plus the Drude-Lorentz term on `[rho, 2)` when present).
pub fn assemble_equivalent_medium(config: &CloakConfig, omega: f64) -> Result<LayeredMedium> {
    check_acoustic(config, omega)?;
    let d = config.dimension as i32;
    let rho = config.rho;
    let map = BlowupMap::new(rho, config.dimension)?;
    let (l1, l2) = (config.object.lambda1, config.object.lambda2);
    let a_scale = rho.powi(2 - d);
    let s_scale = rho.powi(-d);
    let mut layers = Vec::new();
    let object_out = match config.variant {
        Variant::NoLoss => rho,
        _ => rho / 2.0,
    };
    layers.push(MediumLayer { r_in: 0.0, r_out: object_out, coeff: cst(a_scale * l1, real(s_scale * l2)) });
    match config.variant {
        Variant::FixedLossy | Variant::DrudeLorentz { .. } => {
            let s = lossy_scalar(config, omega).unwrap_or_default();
            layers.push(MediumLayer { r_in: rho / 2.0, r_out: rho, coeff: cst(a_scale, s * s_scale) });
        }
        Variant::RhoLossy { .. } => {
            let s = lossy_scalar(config, omega).unwrap_or_default();
            layers.push(MediumLayer { r_in: rho / 2.0, r_out: rho, coeff: cst(1.0, s) });
        }
        _ => {}
    }
    if let Some(sig) = drude_term(config, omega) {
        let m = map;
        let dim = config.dimension as i32;
        let one: RadialFn = Arc::new(|_| real(1.0));
        let s: RadialFn = Arc::new(move |r| {
            let (phi, dphi) = m.profile(r, Side::Outer);
            real(1.0) + sig * dphi * (phi / r).powi(dim - 1)
        });
        layers.push(MediumLayer {
            r_in: rho,
            r_out: 2.0,
            coeff: MediumCoeff::Profile { a_r: one.clone(), a_t: one, s },
        });
    }
    Ok(LayeredMedium {
        dimension: config.dimension,
        core: Core::Regular,
        inner_radius: 0.0,
        layers,
        map: Some(map),
        cloak_rho: Some(rho),
        k_max: object_wavenumber(config, omega),
    })
}

/// Physical-coordinate medium: object, lossy layer, anisotropic cloak on
/// `[1, 2)` with eigenvalues of `F_* I` and scalar `F_* 1`.
pub fn assemble_physical_medium(config: &CloakConfig, omega: f64) -> Result<LayeredMedium> {
    check_acoustic(config, omega)?;
    let d = config.dimension as i32;
    let rho = config.rho;
    let map = BlowupMap::new(rho, config.dimension)?;
    let (l1, l2) = (config.object.lambda1, config.object.lambda2);
    let mut layers = Vec::new();
    match config.variant {
        Variant::NoLoss => {
            layers.push(MediumLayer { r_in: 0.0, r_out: 1.0, coeff: cst(l1, real(l2)) });
        }
        Variant::RhoLossy { .. } => {
            let s = lossy_scalar(config, omega).unwrap_or_default();
            layers.push(MediumLayer { r_in: 0.0, r_out: 0.5, coeff: cst(l1, real(l2)) });
            layers.push(MediumLayer { r_in: 0.5, r_out: 1.0, coeff: cst(rho.powi(d - 2), s * rho.powi(d)) });
        }
        _ => {
            let s = lossy_scalar(config, omega).unwrap_or_default();
            layers.push(MediumLayer { r_in: 0.0, r_out: 0.5, coeff: cst(l1, real(l2)) });
            layers.push(MediumLayer { r_in: 0.5, r_out: 1.0, coeff: cst(1.0, s) });
        }
    }
    let extra = drude_term(config, omega).unwrap_or_default();
    let dim = config.dimension;
    let eigen = move |s: f64| -> (f64, f64, f64) {
        let r = map.inverse_radius(s);
        let x = [r, 0.0, 0.0];
        let id = nalgebra::DMatrix::<C64>::identity(dim, dim);
        match pushforward_coeffs(&map, &id, C64::new(1.0, 0.0), &x, Side::Outer) {
            Ok(c) => (c.radial.re, c.tangential.re, c.scalar.re),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        }
    };
    let e = Arc::new(eigen);
    let (e1, e2, e3) = (e.clone(), e.clone(), e);
    layers.push(MediumLayer {
        r_in: 1.0,
        r_out: 2.0,
        coeff: MediumCoeff::Profile {
            a_r: Arc::new(move |s| real(e1(s).0)),
            a_t: Arc::new(move |s| real(e2(s).1)),
            s: Arc::new(move |s| real(e3(s).2) + extra),
        },
    });
    Ok(LayeredMedium {
        dimension: config.dimension,
        core: Core::Regular,
        inner_radius: 0.0,
        layers,
        map: None,
        cloak_rho: Some(rho),
        k_max: object_wavenumber(config, omega),
    })
}

// ---------------------------------------------------------------------------
// sources

/// `sin^4` bump on `[a, b]`.
pub fn bump(a: f64, b: f64) -> SourceFn {
    Arc::new(move |r| {
        if r <= a || r >= b {
            return real(0.0);
        }
        real((PI * (r - a) / (b - a)).sin().powi(4))
    })
}

#[derive(Clone)]
pub enum SourceSpec {
    /// Incident `exp(i omega x . direction)`, `direction` a unit vector.
    PlaneWave { direction: Point },
    /// `f = strength * delta(x - x0)`.
    PointSource { x0: Point, strength: C64 },
    /// `f = c g(r) S_key` with a `sin^4` bump `g` on `[r_in, r_out]`,
    /// scaled so that `||f||_{L^2} = norm`.
    ModalShell { key: ModeKey, r_in: f64, r_out: f64, norm: f64 },
    /// `f = profile(r) S_key` on `[r_in, r_out]`, unnormalized.
    Radial { key: ModeKey, r_in: f64, r_out: f64, profile: SourceFn },
}

impl std::fmt::Debug for SourceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceSpec::PlaneWave { direction } => write!(f, "PlaneWave({direction:?})"),
            SourceSpec::PointSource { x0, strength } => write!(f, "PointSource({x0:?}, {strength})"),
            SourceSpec::ModalShell { key, r_in, r_out, norm } => {
                write!(f, "ModalShell({key:?}, [{r_in}, {r_out}], {norm})")
            }
            SourceSpec::Radial { key, r_in, r_out, .. } => write!(f, "Radial({key:?}, [{r_in}, {r_out}])"),
        }
    }
}

/// Radial factor of a source in physical coordinates (the `f` level, before
/// multiplication by the radial weight).
#[derive(Clone)]
pub enum ModalSource {
    Distributed {
        a: f64,
        b: f64,
        g: SourceFn,
    },
    /// `weight * delta(r - r0)`.
    Delta {
        r0: f64,
        weight: C64,
    },
}

impl std::fmt::Debug for ModalSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModalSource::Distributed { a, b, .. } => write!(f, "Distributed [{a}, {b}]"),
            ModalSource::Delta { r0, weight } => write!(f, "Delta({r0}, {weight})"),
        }
    }
}

/// Data for one radial problem, shared by every key of order `n`.
#[derive(Debug, Clone)]
pub struct ModeData {
    pub n: usize,
    /// Keys and the factor multiplying the radial solution for each.
    pub keys: Vec<(ModeKey, C64)>,
    /// Amplitude of the regular exterior basis function.
    pub incident: C64,
    pub sources: Vec<ModalSource>,
}

#[derive(Debug, Clone)]
pub struct ExpandedSource {
    pub modes: Vec<ModeData>,
    /// Estimated magnitude of the discarded modes at the observation radius.
    pub tail_estimate: f64,
    pub warning: Option<String>,
}

const TAIL_WARNING: f64 = 1e-8;

fn unit(v: &Point, dim: usize) -> Result<Point> {
    let r = norm(v, dim);
    if !(r > 0.0 && r.is_finite()) {
        return Err(CloakError::InvalidInput("zero direction".into()));
    }
    let mut out = [0.0; 3];
    for i in 0..dim {
        out[i] = v[i] / r;
    }
    Ok(out)
}

fn key_factors(dimension: usize, n: usize, dir: &Point, scale: C64) -> Vec<(ModeKey, C64)> {
    ModeKey::all(dimension, n)
        .into_iter()
        .filter_map(|k| {
            let s = k.angular(dimension, dir);
            (s.abs() > 1e-300).then(|| (k, scale * (s / k.norm_sq(dimension))))
        })
        .collect()
}

/// `L^2` norm of `g(r) S_key` over the annulus.
fn shell_norm(dimension: usize, key: &ModeKey, a: f64, b: f64, g: &SourceFn) -> f64 {
    let s: f64 = composite_gauss(a, b, 16, 20)
        .into_iter()
        .map(|(r, w)| w * g(r).norm_sqr() * r.powi(dimension as i32 - 1))
        .sum();
    (s * key.norm_sq(dimension)).sqrt()
}

/// Modal decomposition of a source. Orders `0..=n_max` are kept; the tail
/// estimate refers to fields observed at radius `r_obs`.
pub fn expand_source(
    source: &SourceSpec,
    omega: f64,
    dimension: usize,
    n_max: usize,
    r_obs: f64,
) -> Result<ExpandedSource> {
    if dimension != 2 && dimension != 3 {
        return Err(CloakError::InvalidInput(format!("dimension {dimension}")));
    }
    if !(omega > 0.0) {
        return Err(CloakError::InvalidInput(format!("omega = {omega} must be positive")));
    }
    let fam = family(dimension);
    let k = C64::new(omega, 0.0);
    let (modes, tail) = match source {
        SourceSpec::PlaneWave { direction } => {
            let d = unit(direction, dimension)?;
            let total = if dimension == 3 { 4.0 * PI } else { 2.0 * PI };
            let modes = (0..=n_max)
                .map(|n| ModeData {
                    n,
                    keys: key_factors(dimension, n, &d, C64::i().powu(n as u32) * total),
                    incident: real(1.0),
                    sources: vec![],
                })
                .collect();
            // |sum_key a_key S_key| <= (2n+1) in 3D, 2 in 2D
            let mut tail = 0.0;
            for n in n_max + 1..n_max + 40 {
                let (j, _) = fam.eval(radial::BasisKind::Regular, n, k * r_obs)?;
                let mult = if dimension == 3 { (2 * n + 1) as f64 } else { 2.0 };
                tail += mult * j.norm();
            }
            (modes, tail)
        }
        SourceSpec::PointSource { x0, strength } => {
            let r0 = norm(x0, dimension);
            if !(r0 > 0.0) {
                return Err(CloakError::InvalidInput("point source at the origin".into()));
            }
            let d = unit(x0, dimension)?;
            let modes = (0..=n_max)
                .map(|n| ModeData {
                    n,
                    keys: key_factors(dimension, n, &d, *strength),
                    incident: real(0.0),
                    sources: vec![ModalSource::Delta { r0, weight: real(r0.powi(1 - dimension as i32)) }],
                })
                .collect();
            // radial Green function ~ k j_n(k r<) h_n(k r>) r0^{d-1}
            let (lo, hi) = if r_obs < r0 { (r_obs, r0) } else { (r0, r_obs) };
            let mut tail = 0.0;
            for n in n_max + 1..n_max + 40 {
                let (j, _) = fam.eval(radial::BasisKind::Regular, n, k * lo)?;
                let (h, _) = fam.eval(radial::BasisKind::Outgoing, n, k * hi)?;
                let mult = if dimension == 3 { (2 * n + 1) as f64 / (4.0 * PI) * omega } else { 0.5 };
                tail += strength.norm() * mult * (j * h).norm();
            }
            (modes, tail)
        }
        SourceSpec::ModalShell { key, r_in, r_out, norm: target } => {
            key.validate(dimension)?;
            check_annulus(*r_in, *r_out)?;
            let g = bump(*r_in, *r_out);
            let c = target / shell_norm(dimension, key, *r_in, *r_out, &g);
            let modes = if key.n <= n_max {
                vec![ModeData {
                    n: key.n,
                    keys: vec![(*key, real(c))],
                    incident: real(0.0),
                    sources: vec![ModalSource::Distributed { a: *r_in, b: *r_out, g }],
                }]
            } else {
                vec![]
            };
            let tail = if key.n <= n_max { 0.0 } else { f64::INFINITY };
            (modes, tail)
        }
        SourceSpec::Radial { key, r_in, r_out, profile } => {
            key.validate(dimension)?;
            check_annulus(*r_in, *r_out)?;
            let modes = if key.n <= n_max {
                vec![ModeData {
                    n: key.n,
                    keys: vec![(*key, real(1.0))],
                    incident: real(0.0),
                    sources: vec![ModalSource::Distributed { a: *r_in, b: *r_out, g: profile.clone() }],
                }]
            } else {
                vec![]
            };
            let tail = if key.n <= n_max { 0.0 } else { f64::INFINITY };
            (modes, tail)
        }
    };
    let warning = (tail > TAIL_WARNING)
        .then(|| format!("{} modes leave an estimated tail of {tail:.3e} at r = {r_obs}", n_max + 1));
    Ok(ExpandedSource { modes, tail_estimate: tail, warning })
}

fn check_annulus(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0 && b > a && b.is_finite()) {
        return Err(CloakError::InvalidInput(format!("bad source annulus [{a}, {b}]")));
    }
    Ok(())
}

/// Key, support and radial factor of a finite single-mode source.
pub fn source_profile(source: &SourceSpec, dimension: usize) -> Result<(ModeKey, f64, f64, SourceFn)> {
    match source {
        SourceSpec::ModalShell { key, r_in, r_out, norm } => {
            key.validate(dimension)?;
            check_annulus(*r_in, *r_out)?;
            let g = bump(*r_in, *r_out);
            let c = norm / shell_norm(dimension, key, *r_in, *r_out, &g);
            Ok((*key, *r_in, *r_out, Arc::new(move |r| g(r) * c)))
        }
        SourceSpec::Radial { key, r_in, r_out, profile } => {
            key.validate(dimension)?;
            check_annulus(*r_in, *r_out)?;
            Ok((*key, *r_in, *r_out, profile.clone()))
        }
        _ => Err(CloakError::InvalidInput(format!("{source:?} is not a single-mode source"))),
    }
}

/// `L^2` norm of a source.
pub fn source_norm(source: &SourceSpec, dimension: usize) -> Result<f64> {
    match source {
        SourceSpec::ModalShell { norm, .. } => Ok(*norm),
        SourceSpec::Radial { key, r_in, r_out, profile } => Ok(shell_norm(dimension, key, *r_in, *r_out, profile)),
        _ => Err(CloakError::InvalidInput(format!("{source:?} has no finite L2 norm"))),
    }
}

// ---------------------------------------------------------------------------
// solving

/// Solved angular order: one radial solution shared by several keys.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub n: usize,
    pub dimension: usize,
    pub omega: f64,
    pub keys: Vec<(ModeKey, C64)>,
    pub radial: RadialSolution,
    /// Present when the radial solution lives in blown-up coordinates.
    pub map: Option<BlowupMap>,
    pub cloak_rho: Option<f64>,
    pub k_max: f64,
}

impl ModeSolution {
    /// Radial factor and its derivative with respect to the physical radius.
    pub fn radial_physical(&self, s: f64) -> Result<(C64, C64)> {
        match &self.map {
            None => self.radial.value_and_derivative(s),
            Some(m) => {
                let r = m.inverse_radius(s);
                let (_, dphi) = m.profile(r, Side::Outer);
                let (u, du) = self.radial.value_and_derivative(r)?;
                Ok((u, du / dphi))
            }
        }
    }

    /// Outgoing amplitude for each key.
    pub fn scattering(&self) -> Result<Vec<(ModeKey, C64)>> {
        let a = self.radial.outgoing_amplitude()?;
        Ok(self.keys.iter().map(|(k, f)| (*k, f * a)).collect())
    }
}

fn to_medium_radius(map: &Option<BlowupMap>, s: f64) -> f64 {
    match map {
        Some(m) => m.inverse_radius(s),
        None => s,
    }
}

/// Convert physical modal sources to `H`-level sources in medium coordinates,
/// split at layer interfaces.
fn radial_sources(medium: &LayeredMedium, sources: &[ModalSource]) -> Result<Vec<RadialSource>> {
    let fam = family(medium.dimension);
    let d = medium.dimension as i32;
    let mut cuts: Vec<f64> = medium.layers.iter().map(|l| l.r_out).collect();
    cuts.insert(0, medium.inner_radius);
    let mut out = Vec::new();
    for src in sources {
        let (a, b) = match src {
            ModalSource::Distributed { a, b, .. } => (*a, *b),
            ModalSource::Delta { r0, .. } => (*r0, *r0),
        };
        if let Some(m) = &medium.map {
            let rho = m.rho();
            if b > 1.0 && a < 2.0 {
                return Err(CloakError::InvalidInput(format!(
                    "source on [{a}, {b}] overlaps the cloak B_2 \\ B_1 (rho = {rho})"
                )));
            }
        }
        let (ra, rb) = (to_medium_radius(&medium.map, a), to_medium_radius(&medium.map, b));
        if ra < medium.inner_radius {
            return Err(CloakError::InvalidInput(format!("source at {a} inside the core")));
        }
        match src {
            ModalSource::Delta { weight, .. } => {
                if !medium.constant_at(ra) {
                    return Err(CloakError::InvalidInput(format!("point source at {a} inside a profile layer")));
                }
                let s0 = b;
                out.push(RadialSource::Delta { r0: ra, weight: weight * s0.powi(d - 1) });
            }
            ModalSource::Distributed { g, .. } => {
                let g = g.clone();
                let h: SourceFn = match &medium.map {
                    Some(m) if b <= 1.0 => {
                        let rho = m.rho();
                        let sc = rho.powi(-d);
                        Arc::new(move |r| g(r / rho) * sc * fam.weight(r))
                    }
                    _ => Arc::new(move |r| g(r) * fam.weight(r)),
                };
                let mut pts = vec![ra];
                pts.extend(cuts.iter().copied().filter(|&c| c > ra && c < rb));
                pts.push(rb);
                for w in pts.windows(2) {
                    if !medium.constant_at(0.5 * (w[0] + w[1])) {
                        return Err(CloakError::InvalidInput(format!(
                            "distributed source on [{a}, {b}] meets a profile layer"
                        )));
                    }
                    out.push(RadialSource::Distributed { a: w[0], b: w[1], h: h.clone() });
                }
            }
        }
    }
    Ok(out)
}

fn radial_layers(medium: &LayeredMedium, omega: f64, n: usize) -> Vec<Layer> {
    let fam = family(medium.dimension);
    let lam = angular_eigenvalue(medium.dimension, n);
    let w2 = omega * omega;
    let mut layers: Vec<Layer> = medium
        .layers
        .iter()
        .map(|l| {
            let coeff = match &l.coeff {
                MediumCoeff::Constant { alpha, beta } => {
                    LayerCoeff::Constant { flux: *alpha, k: omega * (beta / alpha).sqrt() }
                }
                MediumCoeff::Profile { a_r, a_t, s } => {
                    let (a_r, a_t, s) = (a_r.clone(), a_t.clone(), s.clone());
                    LayerCoeff::Profile(Arc::new(move |r| {
                        let w = fam.weight(r);
                        (w * a_r(r), w * (w2 * s(r) - a_t(r) * lam / (r * r)))
                    }))
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

/// Solve one angular order.
pub fn solve_mode(medium: &LayeredMedium, omega: f64, data: &ModeData) -> Result<ModeSolution> {
    medium.validate()?;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(CloakError::InvalidInput(format!("omega = {omega} must be positive")));
    }
    for (k, _) in &data.keys {
        k.validate(medium.dimension)?;
        if k.n != data.n {
            return Err(CloakError::InvalidInput(format!("key {k:?} attached to order {}", data.n)));
        }
    }
    let problem = RadialProblem {
        family: family(medium.dimension),
        order: data.n,
        core: medium.core,
        layers: radial_layers(medium, omega, data.n),
        sources: radial_sources(medium, &data.sources)?,
        incident: data.incident,
    };
    let radial = radial::solve(&problem)?;
    Ok(ModeSolution {
        n: data.n,
        dimension: medium.dimension,
        omega,
        keys: data.keys.clone(),
        radial,
        map: medium.map,
        cloak_rho: medium.cloak_rho,
        k_max: medium.k_max.max(omega),
    })
}

/// Solve every mode of an expanded source in parallel.
pub fn solve_modes(medium: &LayeredMedium, omega: f64, source: &ExpandedSource) -> Result<Vec<ModeSolution>> {
    source.modes.par_iter().map(|m| solve_mode(medium, omega, m)).collect()
}

/// Solve in physical coordinates, integrating the anisotropic cloak layer directly.
pub fn solve_anisotropic_direct(config: &CloakConfig, omega: f64, data: &ModeData) -> Result<ModeSolution> {
    solve_mode(&assemble_physical_medium(config, omega)?, omega, data)
}

/// Default truncation order for fields observed out to radius `r`.
pub fn default_modes(omega: f64, r: f64) -> usize {
    (omega * r).ceil() as usize + 12
}

// ---------------------------------------------------------------------------
// evaluation

/// Total field at a physical point.
pub fn eval_field(solutions: &[ModeSolution], x: &Point) -> Result<C64> {
    let mut sum = C64::new(0.0, 0.0);
    for sol in solutions {
        let s = norm(x, sol.dimension);
        let (u, _) = sol.radial_physical(s)?;
        for (k, f) in &sol.keys {
            sum += f * u * k.angular(sol.dimension, x);
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum NormKind {
    L2,
    H1,
}

/// `{x : r_in < |x| < r_out}`; `r_in = 0` is a ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub r_in: f64,
    pub r_out: f64,
}

impl Annulus {
    pub fn new(r_in: f64, r_out: f64) -> Self {
        Self { r_in, r_out }
    }
}

const QUAD_ORDER: usize = 20;

fn quadrature_nodes(sols: &[&ModeSolution], region: Annulus) -> Vec<(f64, f64)> {
    let (a, b) = (region.r_in, region.r_out);
    let mut cuts = vec![a, b, 0.5, 1.0, 2.0];
    let mut k_max: f64 = 1.0;
    for s in sols {
        k_max = k_max.max(s.k_max);
        for r in s.radial.breakpoints() {
            cuts.push(match &s.map {
                Some(m) => m.map_forward(&[r, 0.0, 0.0])[0],
                None => r,
            });
        }
        if let Some(rho) = s.cloak_rho {
            // inner edge of the cloak: structure on the scale rho / (2 - rho)
            let mut t = rho / (2.0 - rho);
            while t < 1.0 {
                cuts.push(1.0 + t);
                t *= 2.0;
            }
            // object: structure near the origin on the scale of the lossy layer
            let mut t = 0.5;
            while t > 1e-3 {
                cuts.push(t);
                t *= 0.5;
            }
        }
    }
    cuts.retain(|&c| c >= a && c <= b);
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * y.abs().max(1.0));
    let width = (6.0 / k_max).min(0.5);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let panels = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
        out.extend(composite_gauss(w[0], w[1], panels, QUAD_ORDER));
    }
    out
}

/// Norm of `sum(plus) - sum(minus)` over the annulus, computed mode by mode
/// in physical coordinates.
pub fn difference_norm(plus: &[ModeSolution], minus: &[ModeSolution], region: Annulus, kind: NormKind) -> Result<f64> {
    if !(region.r_in >= 0.0 && region.r_out > region.r_in && region.r_out.is_finite()) {
        return Err(CloakError::InvalidInput(format!("bad region {region:?}")));
    }
    let all: Vec<(&ModeSolution, f64)> = plus.iter().map(|s| (s, 1.0)).chain(minus.iter().map(|s| (s, -1.0))).collect();
    let Some(dim) = all.first().map(|(s, _)| s.dimension) else {
        return Ok(0.0);
    };
    // key -> (solution index, factor)
    let mut groups: BTreeMap<ModeKey, Vec<(usize, C64)>> = BTreeMap::new();
    for (i, (s, sign)) in all.iter().enumerate() {
        if s.dimension != dim {
            return Err(CloakError::InvalidInput("mixed dimensions".into()));
        }
        for (k, f) in &s.keys {
            groups.entry(*k).or_default().push((i, f * *sign));
        }
    }
    let sols: Vec<&ModeSolution> = all.iter().map(|(s, _)| *s).collect();
    let nodes = quadrature_nodes(&sols, region);
    let rows: Vec<f64> = nodes
        .par_iter()
        .map(|&(r, w)| -> Result<f64> {
            let vals: Vec<(C64, C64)> = sols.iter().map(|s| s.radial_physical(r)).collect::<Result<_>>()?;
            let mut acc = 0.0;
            for (key, members) in &groups {
                let (mut u, mut du) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for (i, f) in members {
                    u += f * vals[*i].0;
                    du += f * vals[*i].1;
                }
                let mut dens = u.norm_sqr();
                if kind == NormKind::H1 {
                    dens += du.norm_sqr() + angular_eigenvalue(dim, key.n) * u.norm_sqr() / (r * r);
                }
                acc += dens * key.norm_sq(dim);
            }
            Ok(acc * w * r.powi(dim as i32 - 1))
        })
        .collect::<Result<_>>()?;
    Ok(rows.iter().sum::<f64>().sqrt())
}

pub fn field_norm(solutions: &[ModeSolution], region: Annulus, kind: NormKind) -> Result<f64> {
    difference_norm(solutions, &[], region, kind)
}

/// `||u_c - u||` over the annulus.
pub fn visibility_norm(
    sol_c: &[ModeSolution],
    sol_free: &[ModeSolution],
    region: Annulus,
    kind: NormKind,
) -> Result<f64> {
    for (a, b) in sol_c.iter().zip(sol_free) {
        if a.omega != b.omega {
            return Err(CloakError::InvalidInput("solutions at different frequencies".into()));
        }
    }
    difference_norm(sol_c, sol_free, region, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ObjectParams;

    fn cfg(d: usize, rho: f64, variant: Variant, l1: f64, l2: f64) -> CloakConfig {
        CloakConfig::new(d, rho, variant, ObjectParams { lambda1: l1, lambda2: l2 }).unwrap()
    }

    fn constant(l: &MediumLayer) -> (C64, C64) {
        match l.coeff {
            MediumCoeff::Constant { alpha, beta } => (alpha, beta),
            _ => panic!("profile layer"),
        }
    }

    #[test]
    fn fixed_lossy_equivalent_layers() {
        let omega = 2.0;
        let m = assemble_equivalent_medium(&cfg(3, 0.1, Variant::FixedLossy, 1.0, 1.0), omega).unwrap();
        assert_eq!(m.layers.len(), 2);
        let (a0, b0) = constant(&m.layers[0]);
        let (a1, b1) = constant(&m.layers[1]);
        assert!((a0 - 10.0).norm() < 1e-12 && (b0 - 1000.0).norm() < 1e-9);
        assert!((a1 - 10.0).norm() < 1e-12);
        assert!((b1 - C64::new(1000.0, 1000.0 / omega)).norm() < 1e-9);
        assert!((m.layers[0].r_out - 0.05).abs() < 1e-15);
    }

    #[test]
    fn rho_lossy_layer_scalar() {
        let rho: f64 = 0.1;
        let m = assemble_equivalent_medium(&cfg(3, rho, Variant::RhoLossy { gamma: 0.5 }, 1.0, 1.0), 1.0).unwrap();
        let (a1, b1) = constant(&m.layers[1]);
        assert!((a1 - 1.0).norm() < 1e-15);
        let expect = 1.0 / (rho * rho.powf(1.5));
        assert!((b1.im - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn no_loss_unit_object_pulls_back_to_scaled_ball() {
        // a background-valued object still shrinks to a small, nonzero scatterer
        let omega = 1.3;
        let eq = assemble_equivalent_medium(&cfg(3, 0.2, Variant::NoLoss, 1.0, 1.0), omega).unwrap();
        assert_eq!(eq.layers.len(), 1);
        let (a0, b0) = constant(&eq.layers[0]);
        assert!((a0 - 5.0).norm() < 1e-12 && (b0 - 125.0).norm() < 1e-9);
        assert!((eq.layers[0].r_out - 0.2).abs() < 1e-15);
        let eq2 = assemble_equivalent_medium(&cfg(2, 0.2, Variant::NoLoss, 1.0, 1.0), omega).unwrap();
        let (a0, b0) = constant(&eq2.layers[0]);
        assert!((a0 - 1.0).norm() < 1e-12 && (b0 - 25.0).norm() < 1e-12);
    }

    #[test]
    fn plane_wave_coefficients() {
        let omega = 1.7;
        for (dim, dir) in [(3, [0.3, -0.5, 0.8]), (2, [0.6, 0.8, 0.0])] {
            let src = expand_source(&SourceSpec::PlaneWave { direction: dir }, omega, dim, 30, 2.0).unwrap();
            assert!(src.warning.is_none());
            if dim == 3 {
                let z = expand_source(&SourceSpec::PlaneWave { direction: [0.0, 0.0, 1.0] }, omega, 3, 5, 1.0).unwrap();
                for m in &z.modes {
                    assert_eq!(m.keys.len(), 1);
                    let expect = C64::i().powu(m.n as u32) * (2 * m.n + 1) as f64;
                    assert!((m.keys[0].1 - expect).norm() < 1e-12);
                }
            }
            let sols = solve_modes(&LayeredMedium::homogeneous(dim, omega), omega, &src).unwrap();
            let d = unit(&dir, dim).unwrap();
            for x in [[0.3, 1.1, -0.4], [-1.2, 0.2, 0.9], [0.01, 0.0, 0.02]] {
                let mut x = x;
                if dim == 2 {
                    x[2] = 0.0;
                }
                let phase: f64 = (0..3).map(|i| x[i] * d[i]).sum::<f64>() * omega;
                let u = eval_field(&sols, &x).unwrap();
                assert!((u - C64::from_polar(1.0, phase)).norm() < 1e-10, "{dim} {x:?} {u}");
            }
        }
    }

    #[test]
    fn point_source_fundamental_solution() {
        let omega = 1.0;
        let x0 = [0.0, 0.0, 3.0];
        let src = SourceSpec::PointSource { x0, strength: real(-1.0) };
        let short = expand_source(&src, omega, 3, 25, 2.5).unwrap();
        assert!(short.warning.is_some());
        let e = expand_source(&src, omega, 3, 140, 2.5).unwrap();
        assert!(e.warning.is_none(), "{:?}", e.warning);
        let sols = solve_modes(&LayeredMedium::homogeneous(3, omega), omega, &e).unwrap();
        for x in [[0.0, 0.0, 2.5], [2.5 * 0.6, 0.0, 2.5 * 0.8], [0.0, -2.5, 0.0]] {
            let dist: f64 = (0..3).map(|i| (x[i] - x0[i]).powi(2)).sum::<f64>().sqrt();
            let g = C64::from_polar(1.0, omega * dist) / (4.0 * PI * dist);
            let u = eval_field(&sols, &x).unwrap();
            assert!((u - g).norm() < 1e-9, "{x:?}: {u} vs {g}");
        }
    }

    #[test]
    fn dirichlet_core_amplitude() {
        use crate::specfun::{sph_bessel, SphKind};
        let (rho, omega) = (0.3, 1.4);
        let src = expand_source(&SourceSpec::PlaneWave { direction: [0.0, 0.0, 1.0] }, omega, 3, 8, 1.0).unwrap();
        let sols = solve_modes(&LayeredMedium::dirichlet(3, rho, omega), omega, &src).unwrap();
        let z = C64::new(omega * rho, 0.0);
        let j = sph_bessel(SphKind::J, 0, z).unwrap().value;
        let h = sph_bessel(SphKind::H1, 0, z).unwrap().value;
        assert!((sols[0].radial.outgoing_amplitude().unwrap() + j / h).norm() < 1e-12);
        for x in [[rho, 0.0, 0.0], [0.0, 0.0, -rho], [0.1, 0.2, (rho * rho - 0.05_f64).sqrt()]] {
            assert!(eval_field(&sols, &x).unwrap().norm() < 1e-8);
        }
    }

    #[test]
    fn shell_is_single_mode_with_unit_norm() {
        let key = ModeKey { n: 2, m: 1, odd: true };
        let src = SourceSpec::ModalShell { key, r_in: 2.5, r_out: 3.5, norm: 1.0 };
        let e = expand_source(&src, 1.0, 3, 10, 4.0).unwrap();
        assert_eq!(e.modes.len(), 1);
        assert_eq!(e.modes[0].n, 2);
        let ModalSource::Distributed { a, b, g } = &e.modes[0].sources[0] else { panic!() };
        let f = SourceSpec::Radial {
            key,
            r_in: *a,
            r_out: *b,
            profile: {
                let g = g.clone();
                let c = e.modes[0].keys[0].1;
                Arc::new(move |r| g(r) * c)
            },
        };
        assert!((source_norm(&f, 3).unwrap() - 1.0).abs() < 1e-12);
    }

    fn pullback_vs_direct(c: &CloakConfig, omega: f64, src: &SourceSpec, n_max: usize) -> (f64, f64) {
        let e = expand_source(src, omega, c.dimension, n_max, 4.0).unwrap();
        let eq = solve_modes(&assemble_equivalent_medium(c, omega).unwrap(), omega, &e).unwrap();
        let direct: Vec<ModeSolution> =
            e.modes.iter().map(|m| solve_anisotropic_direct(c, omega, m).unwrap()).collect();
        for s in &direct {
            assert!(s.radial.interface_residual().unwrap() < 1e-9);
        }
        let region = Annulus::new(1.0, 4.0);
        let diff = difference_norm(&eq, &direct, region, NormKind::L2).unwrap();
        (diff, field_norm(&direct, region, NormKind::L2).unwrap())
    }

    #[test]
    fn equivalence_plane_wave() {
        let c = cfg(3, 0.2, Variant::FixedLossy, 1.0, 1.0);
        let (diff, size) = pullback_vs_direct(&c, 1.0, &SourceSpec::PlaneWave { direction: [0.0, 0.0, 1.0] }, 10);
        assert!(diff <= 1e-8 * size, "{diff} / {size}");
    }

    #[test]
    fn equivalence_other_variants() {
        let src = SourceSpec::ModalShell { key: ModeKey { n: 1, m: 1, odd: false }, r_in: 2.5, r_out: 3.5, norm: 1.0 };
        for (d, variant) in [
            (3, Variant::NoLoss),
            (2, Variant::FixedLossy),
            (3, Variant::RhoLossy { gamma: 0.5 }),
            (3, Variant::DrudeLorentz { sigma_n: 1.0, sigma_d: 1.0, omega_c: None }),
        ] {
            let c = cfg(d, 0.15, variant.clone(), 2.0, 3.0);
            let (diff, size) = pullback_vs_direct(&c, 1.5, &src, 3);
            assert!(diff <= 1e-8 * size, "{variant:?}: {diff} / {size}");
        }
    }

    #[test]
    fn reciprocity() {
        let c = cfg(3, 0.1, Variant::FixedLossy, 2.0, 3.0);
        let omega = 1.2;
        let m = assemble_equivalent_medium(&c, omega).unwrap();
        let (r1, r2) = (2.4, 3.3);
        let data = |r0: f64| ModeData {
            n: 2,
            keys: vec![(ModeKey::zonal(2), real(1.0))],
            incident: real(0.0),
            sources: vec![ModalSource::Delta { r0, weight: real(1.0) }],
        };
        let g12 = solve_mode(&m, omega, &data(r1)).unwrap().radial_physical(r2).unwrap().0;
        let g21 = solve_mode(&m, omega, &data(r2)).unwrap().radial_physical(r1).unwrap().0;
        // delta weights are at the f level, so the symmetric kernel is u / r0^{d-1}
        let (a, b) = (g12 / (r1 * r1), g21 / (r2 * r2));
        assert!((a - b).norm() < 1e-9 * a.norm(), "{a} {b}");
    }

    fn reflection(m: &LayeredMedium, omega: f64, n: usize) -> C64 {
        let data = ModeData { n, keys: vec![(ModeKey::zonal(n), real(1.0))], incident: real(1.0), sources: vec![] };
        solve_mode(m, omega, &data).unwrap().radial.outgoing_amplitude().unwrap()
    }

    #[test]
    fn lossless_unitarity_and_lossy_dissipation() {
        // incoming h^(2) = 2j - h^(1) carries the amplitude 1/2 per unit regular
        // part; the scattered outgoing total is 1/2 + a
        let omega = 1.1;
        let lossless = assemble_physical_medium(&cfg(3, 0.2, Variant::NoLoss, 2.0, 5.0), omega).unwrap();
        let lossy = assemble_physical_medium(&cfg(3, 0.2, Variant::FixedLossy, 2.0, 5.0), omega).unwrap();
        for n in 0..6 {
            let s = 1.0 + 2.0 * reflection(&lossless, omega, n);
            assert!((s.norm() - 1.0).abs() < 1e-9, "n = {n}: |S| = {}", s.norm());
            let s = 1.0 + 2.0 * reflection(&lossy, omega, n);
            assert!(s.norm() <= 1.0 + 1e-12, "n = {n}: |S| = {}", s.norm());
        }
        for d in [2, 3] {
            let m = assemble_physical_medium(&cfg(d, 0.3, Variant::NoLoss, 0.5, 4.0), 2.0).unwrap();
            for n in 0..4 {
                let s = 1.0 + 2.0 * reflection(&m, 2.0, n);
                assert!((s.norm() - 1.0).abs() < 1e-9, "d = {d} n = {n}");
            }
        }
    }

    #[test]
    fn visibility_trivial_cases() {
        let omega = 1.0;
        let src = expand_source(&SourceSpec::PlaneWave { direction: [0.0, 0.0, 1.0] }, omega, 3, 8, 4.0).unwrap();
        let free = solve_modes(&LayeredMedium::homogeneous(3, omega), omega, &src).unwrap();
        let region = Annulus::new(2.0, 4.0);
        assert_eq!(visibility_norm(&free, &free, region, NormKind::H1).unwrap(), 0.0);
    }

    #[test]
    fn norm_quadrature_matches_closed_form() {
        // ||j_0(k r)||^2 over B_2 in 3D is 4 pi int sin^2(kr)/k^2 dr
        let omega = 3.0;
        let data = ModeData { n: 0, keys: vec![(ModeKey::zonal(0), real(1.0))], incident: real(1.0), sources: vec![] };
        let s = solve_mode(&LayeredMedium::homogeneous(3, omega), omega, &data).unwrap();
        let got = field_norm(&[s], Annulus::new(0.0, 2.0), NormKind::L2).unwrap();
        let k = omega;
        let exact = (4.0 * PI * (1.0 - (4.0 * k).sin() / (4.0 * k)) / (k * k)).sqrt();
        assert!((got - exact).abs() < 1e-12 * exact);
    }
}
