//! Resonances of a homogeneous object filling `B_1`: frequencies at which
//! the interior problem admits a field with vanishing normal trace
//! (Neumann flux for acoustics, normal curls for Maxwell), and the
//! compatibility pairing of interior sources with such fields.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{CloakError, Result};
use crate::geometry::Point;
use crate::helmholtz::{angular_eigenvalue, source_profile, ModeKey, SourceSpec};
use crate::maxwell::{current_channels, sphere_directions, vsh, CurrentSpec, Polarization};
use crate::radial::SourceFn;
use crate::specfun::{composite_gauss, cyl_bessel, riccati, sph_bessel, CylKind, RiccatiKind, SphKind};

/// Residual below which a candidate frequency counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;
const SCAN_STEP: f64 = PI / 8.0;
const BISECTION_TOL: f64 = 1e-12;
/// Trace samples used by the certification.
const TRACE_DIRECTIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ResonanceFamily {
    Acoustic3D,
    Acoustic2D,
    MaxwellTE,
    MaxwellTM,
}

impl ResonanceFamily {
    pub fn dimension(self) -> usize {
        match self {
            ResonanceFamily::Acoustic2D => 2,
            _ => 3,
        }
    }

    fn is_maxwell(self) -> bool {
        matches!(self, ResonanceFamily::MaxwellTE | ResonanceFamily::MaxwellTM)
    }
}

/// Candidate interior field of one multipole at frequency `omega`, scaled to
/// unit `L^2(B_1)` norm (of `E` for Maxwell).
///
/// `params` holds `(lambda1, lambda2)` for acoustics and `(eps_O, mu_O)` for
/// Maxwell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantMode {
    pub family: ResonanceFamily,
    pub key: ModeKey,
    pub omega: f64,
    pub k: f64,
    pub params: (f64, f64),
    pub scale: f64,
}

fn wavenumber(family: ResonanceFamily, params: (f64, f64), omega: f64) -> f64 {
    if family.is_maxwell() {
        omega * (params.0 * params.1).sqrt()
    } else {
        omega * (params.1 / params.0).sqrt()
    }
}

fn check_params(family: ResonanceFamily, params: (f64, f64), n: usize) -> Result<()> {
    if !(params.0 > 0.0 && params.1 > 0.0 && params.0.is_finite() && params.1.is_finite()) {
        return Err(CloakError::InvalidInput("object coefficients must be positive".into()));
    }
    if family.is_maxwell() && n == 0 {
        return Err(CloakError::InvalidInput("no electromagnetic monopole".into()));
    }
    Ok(())
}

/// Scalar whose simple roots in `k` are the resonances of order `n`.
fn condition(family: ResonanceFamily, params: (f64, f64), n: usize, k: f64) -> Result<f64> {
    let z = C64::new(k, 0.0);
    Ok(match family {
        ResonanceFamily::Acoustic3D => sph_bessel(SphKind::J, n, z)?.derivative.re,
        ResonanceFamily::Acoustic2D => {
            let j = cyl_bessel(CylKind::J, n, z)?;
            // interior J_n(k r) against r^{-n} (a constant when n = 0) outside
            params.0 * k * j.derivative.re + n as f64 * j.value.re
        }
        ResonanceFamily::MaxwellTE | ResonanceFamily::MaxwellTM => riccati(RiccatiKind::Psi, n, z)?.value.re,
    })
}

/// Regular radial factor `R(r)` and `R'(r)` of the interior field before
/// scaling: `j_n(kr)`, `J_n(kr)` or `psi_n(kr)`.
fn interior_radial(family: ResonanceFamily, n: usize, k: f64, r: f64) -> Result<(f64, f64)> {
    let z = C64::new(k * r, 0.0);
    let e = match family {
        ResonanceFamily::Acoustic3D => sph_bessel(SphKind::J, n, z)?,
        ResonanceFamily::Acoustic2D => cyl_bessel(CylKind::J, n, z)?,
        _ => riccati(RiccatiKind::Psi, n, z)?,
    };
    Ok((e.value.re, k * e.derivative.re))
}

/// Radial coefficients of a field against the channels `(X, S e_r, grad_S S)`
/// (Maxwell `E`) or the single scalar channel (acoustics).
fn mode_channels(mode: &ResonantMode, r: f64) -> Result<[f64; 3]> {
    let n = mode.key.n;
    let (f, df) = interior_radial(mode.family, n, mode.k, r)?;
    let c = mode.scale;
    Ok(match mode.family {
        ResonanceFamily::Acoustic3D | ResonanceFamily::Acoustic2D => [c * f, 0.0, 0.0],
        ResonanceFamily::MaxwellTE => [c * f / r, 0.0, 0.0],
        // E = curl(psi/r X) / (-i omega eps); the common phase is dropped
        ResonanceFamily::MaxwellTM => {
            let lam = angular_eigenvalue(3, n);
            let w = mode.omega * mode.params.0;
            [0.0, c * lam * f / (r * r) / w, c * df / r / w]
        }
    })
}

fn channel_weights(family: ResonanceFamily, n: usize) -> [f64; 3] {
    if family.is_maxwell() {
        let lam = angular_eigenvalue(3, n);
        [lam, 1.0, lam]
    } else {
        [1.0, 0.0, 0.0]
    }
}

fn l2_nodes() -> Vec<(f64, f64)> {
    composite_gauss(0.0, 1.0, 24, 20)
}

impl ResonantMode {
    /// Candidate field at an arbitrary frequency, resonant or not.
    pub fn candidate(family: ResonanceFamily, params: (f64, f64), key: ModeKey, omega: f64) -> Result<Self> {
        check_params(family, params, key.n)?;
        key.validate(family.dimension())?;
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(CloakError::InvalidInput(format!("omega = {omega} must be positive")));
        }
        let mut mode = ResonantMode { family, key, omega, k: wavenumber(family, params, omega), params, scale: 1.0 };
        let norm = mode.l2_norm()?;
        if !(norm > 0.0) {
            return Err(CloakError::Numerical(format!("degenerate candidate at omega = {omega}")));
        }
        mode.scale = 1.0 / norm;
        Ok(mode)
    }

    /// `||field||_{L^2(B_1)}`.
    pub fn l2_norm(&self) -> Result<f64> {
        let d = self.family.dimension();
        let w = channel_weights(self.family, self.key.n);
        let mut acc = 0.0;
        for (r, q) in l2_nodes() {
            let c = mode_channels(self, r)?;
            acc += q * r.powi(d as i32 - 1) * (0..3).map(|j| w[j] * c[j] * c[j]).sum::<f64>();
        }
        Ok((acc * self.key.norm_sq(d)).sqrt())
    }

    /// Largest violation of the defining boundary conditions on `|x| = 1`
    /// over sample directions. Interior equations hold identically.
    pub fn certification_residual(&self) -> Result<f64> {
        let n = self.key.n;
        let (f, df) = interior_radial(self.family, n, self.k, 1.0)?;
        let c = self.scale;
        let mut worst: f64 = 0.0;
        match self.family {
            ResonanceFamily::Acoustic3D => {
                for x in sphere_directions(TRACE_DIRECTIONS) {
                    let s = self.key.angular(3, &x);
                    worst = worst.max((self.params.0 * c * df * s).abs());
                }
            }
            ResonanceFamily::Acoustic2D => {
                // exterior field: c f r^{-n} (a constant for n = 0), coefficient 1
                let outer_flux = -(n as f64) * c * f;
                for i in 0..TRACE_DIRECTIONS {
                    let t = 2.0 * PI * i as f64 / TRACE_DIRECTIONS as f64;
                    let s = self.key.angular(2, &[t.cos(), t.sin(), 0.0]);
                    worst = worst.max(((self.params.0 * c * df - outer_flux) * s).abs());
                }
            }
            ResonanceFamily::MaxwellTE | ResonanceFamily::MaxwellTM => {
                let (eps, mu) = self.params;
                let lam = angular_eigenvalue(3, n);
                let w = self.omega;
                for x in sphere_directions(TRACE_DIRECTIONS) {
                    let v = vsh(&self.key, &x)?;
                    // normal parts of curl E = i w mu H and curl H = -i w eps E
                    let (curl_e, curl_h) = match self.family {
                        ResonanceFamily::MaxwellTE => {
                            let h_r = lam * c * f / (w * mu);
                            (w * mu * h_r * v.s, 0.0)
                        }
                        _ => {
                            let e_r = lam * c * f / (w * eps);
                            (0.0, w * eps * e_r * v.s)
                        }
                    };
                    worst = worst.max(curl_e.abs() + curl_h.abs());
                }
            }
        }
        Ok(worst)
    }

    /// Value of the (unscaled) interior field at `x` for acoustics; the
    /// exterior extension is used in 2D.
    pub fn acoustic_value(&self, x: &Point) -> Result<f64> {
        let d = self.family.dimension();
        if self.family.is_maxwell() {
            return Err(CloakError::InvalidInput("not an acoustic mode".into()));
        }
        let r = crate::geometry::norm(x, d);
        let s = self.key.angular(d, x);
        if r <= 1.0 || d == 3 {
            return Ok(self.scale * interior_radial(self.family, self.key.n, self.k, r)?.0 * s);
        }
        let (f, _) = interior_radial(self.family, self.key.n, self.k, 1.0)?;
        Ok(self.scale * f * r.powi(-(self.key.n as i32)) * s)
    }
}

/// `true` when the candidate field at `omega` passes the certification.
pub fn is_resonant(family: ResonanceFamily, params: (f64, f64), key: ModeKey, omega: f64) -> Result<bool> {
    Ok(ResonantMode::candidate(family, params, key, omega)?.certification_residual()? <= RESONANCE_TOL)
}

fn roots_in(family: ResonanceFamily, params: (f64, f64), n: usize, window: (f64, f64)) -> Result<Vec<f64>> {
    check_params(family, params, n)?;
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo || hi <= 0.0 {
        return Ok(Vec::new());
    }
    let scale = wavenumber(family, params, 1.0);
    // k = 0 is a trivial root of several conditions
    let k_lo = (lo * scale).max(1e-6);
    let k_hi = hi * scale;
    let f = |k: f64| condition(family, params, n, k);
    let mut roots = Vec::new();
    let mut a = k_lo;
    let mut fa = f(a)?;
    while a < k_hi {
        let b = (a + SCAN_STEP).min(k_hi);
        let fb = f(b)?;
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            while x1 - x0 > BISECTION_TOL {
                let m = 0.5 * (x0 + x1);
                let fm = f(m)?;
                if fm == 0.0 {
                    x0 = m;
                    x1 = m;
                    break;
                }
                if (fm < 0.0) == (f0 < 0.0) {
                    x0 = m;
                    f0 = fm;
                } else {
                    x1 = m;
                }
            }
            roots.push(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 && roots.last() != Some(&a) {
        roots.push(a);
    }
    Ok(roots.into_iter().map(|k| k / scale).collect())
}

/// Frequencies in `window` with `j_n'(k) = 0`, `k = omega sqrt(lambda2 / lambda1)`.
pub fn acoustic_resonances_3d(lambda1: f64, lambda2: f64, n: usize, window: (f64, f64)) -> Result<Vec<f64>> {
    roots_in(ResonanceFamily::Acoustic3D, (lambda1, lambda2), n, window)
}

/// Frequencies in `window` with `J_0'(k) = 0` (`n = 0`) or
/// `lambda1 k J_n'(k) + n J_n(k) = 0`.
pub fn acoustic_resonances_2d(lambda1: f64, lambda2: f64, n: usize, window: (f64, f64)) -> Result<Vec<f64>> {
    roots_in(ResonanceFamily::Acoustic2D, (lambda1, lambda2), n, window)
}

/// Frequencies in `window` with `psi_n(k) = 0`, `k = omega sqrt(eps mu)`.
/// Both polarizations share the condition.
pub fn maxwell_resonances(eps: f64, mu: f64, n: usize, pol: Polarization, window: (f64, f64)) -> Result<Vec<f64>> {
    let family = match pol {
        Polarization::TE => ResonanceFamily::MaxwellTE,
        Polarization::TM => ResonanceFamily::MaxwellTM,
    };
    roots_in(family, (eps, mu), n, window)
}

/// Certified resonant modes with key `key` in the window.
pub fn resonant_modes(
    family: ResonanceFamily,
    params: (f64, f64),
    key: ModeKey,
    window: (f64, f64),
) -> Result<Vec<ResonantMode>> {
    let mut out = Vec::new();
    for omega in roots_in(family, params, key.n, window)? {
        let mode = ResonantMode::candidate(family, params, key, omega)?;
        let res = mode.certification_residual()?;
        if res > RESONANCE_TOL {
            return Err(CloakError::Numerical(format!("root at omega = {omega} fails certification ({res:.2e})")));
        }
        out.push(mode);
    }
    Ok(out)
}

/// Nearest resonance of order `n` to `omega` within a factor-two window.
pub fn nearest_resonance(family: ResonanceFamily, params: (f64, f64), n: usize, omega: f64) -> Result<Option<f64>> {
    let roots = roots_in(family, params, n, (0.0, 2.0 * omega + 4.0))?;
    Ok(roots.into_iter().min_by(|a, b| (a - omega).abs().total_cmp(&(b - omega).abs())))
}

/// Interior source equal to the mode restricted to `B_1`.
#[derive(Clone, Debug)]
pub enum ResonantSource {
    Acoustic(SourceSpec),
    Maxwell(CurrentSpec),
}

/// `f = e 1_{B_1}` (acoustics) or `J = E 1_{B_1}` (Maxwell TE). TM currents
/// would carry a surface term on `|x| = 1` and are rejected.
pub fn build_resonant_source(mode: &ResonantMode) -> Result<ResonantSource> {
    let m = *mode;
    match mode.family {
        ResonanceFamily::Acoustic3D | ResonanceFamily::Acoustic2D => {
            let profile: SourceFn = Arc::new(move |r| {
                C64::new(m.scale * interior_radial(m.family, m.key.n, m.k, r).map(|v| v.0).unwrap_or(0.0), 0.0)
            });
            Ok(ResonantSource::Acoustic(SourceSpec::Radial { key: m.key, r_in: 0.0, r_out: 1.0, profile }))
        }
        ResonanceFamily::MaxwellTE => {
            let profile: SourceFn = Arc::new(move |r| {
                let f = interior_radial(m.family, m.key.n, m.k, r).map(|v| v.0).unwrap_or(0.0);
                C64::new(m.scale * f / r, 0.0)
            });
            Ok(ResonantSource::Maxwell(CurrentSpec::TeProfile { key: m.key, r_in: 0.0, r_out: 1.0, profile }))
        }
        ResonanceFamily::MaxwellTM => Err(CloakError::InvalidInput(
            "TM resonant currents are not divergence-free on |x| = 1; use the TE mode".into(),
        )),
    }
}

/// `L^2(B_1)` pairing `int f conj(e)` of a single-mode acoustic source.
pub fn compatibility_pairing_acoustic(source: &SourceSpec, mode: &ResonantMode) -> Result<C64> {
    if mode.family.is_maxwell() {
        return Err(CloakError::InvalidInput("acoustic source paired with a Maxwell mode".into()));
    }
    let d = mode.family.dimension();
    let (key, a, b, g) = source_profile(source, d)?;
    if key != mode.key {
        return Ok(C64::new(0.0, 0.0));
    }
    let b = b.min(1.0);
    if b <= a {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (r, q) in composite_gauss(a, b, 128, 20) {
        acc += g(r) * mode_channels(mode, r)?[0] * q * r.powi(d as i32 - 1);
    }
    Ok(acc * key.norm_sq(d))
}

/// `L^2(B_1)` pairing `int J . conj(E)` of a finite current with a Maxwell mode.
pub fn compatibility_pairing(current: &CurrentSpec, mode: &ResonantMode) -> Result<C64> {
    if !mode.family.is_maxwell() {
        return Err(CloakError::InvalidInput("current paired with an acoustic mode".into()));
    }
    let ch = current_channels(current)?;
    let same_pol = matches!(
        (ch.pol, mode.family),
        (Polarization::TE, ResonanceFamily::MaxwellTE) | (Polarization::TM, ResonanceFamily::MaxwellTM)
    );
    let b = ch.r_out.min(1.0);
    if ch.key != mode.key || !same_pol || b <= ch.r_in {
        return Ok(C64::new(0.0, 0.0));
    }
    let w = channel_weights(mode.family, mode.key.n);
    let mut acc = C64::new(0.0, 0.0);
    for (r, q) in composite_gauss(ch.r_in, b, 128, 20) {
        let j = (ch.coeffs)(r);
        let e = mode_channels(mode, r)?;
        for i in 0..3 {
            acc += j[i] * (w[i] * e[i] * q * r * r);
        }
    }
    Ok(acc * mode.key.norm_sq(3))
}

/// Removes the component along the unit-norm mode: `f - <f, e> e` on `B_1`.
pub fn project_out_acoustic(source: &SourceSpec, mode: &ResonantMode) -> Result<SourceSpec> {
    let d = mode.family.dimension();
    let (key, a, b, g) = source_profile(source, d)?;
    if b > 1.0 {
        return Err(CloakError::InvalidInput("projection needs a source inside B_1".into()));
    }
    let alpha = compatibility_pairing_acoustic(source, mode)?;
    let m = *mode;
    let profile: SourceFn = Arc::new(move |r| {
        let inside = if r >= a && r <= b { g(r) } else { C64::new(0.0, 0.0) };
        inside - alpha * mode_channels(&m, r).map(|c| c[0]).unwrap_or(0.0)
    });
    Ok(SourceSpec::Radial { key, r_in: 0.0, r_out: 1.0, profile })
}

/// TE analogue of [`project_out_acoustic`].
pub fn project_out(current: &CurrentSpec, mode: &ResonantMode) -> Result<CurrentSpec> {
    if mode.family != ResonanceFamily::MaxwellTE {
        return Err(CloakError::InvalidInput("projection implemented for TE modes".into()));
    }
    let ch = current_channels(current)?;
    if ch.pol != Polarization::TE || ch.r_out > 1.0 {
        return Err(CloakError::InvalidInput("projection needs a TE current inside B_1".into()));
    }
    let alpha = compatibility_pairing(current, mode)?;
    let m = *mode;
    let (a, b, j) = (ch.r_in, ch.r_out, ch.coeffs.clone());
    let profile: SourceFn = Arc::new(move |r| {
        let inside = if r >= a && r <= b { j(r)[0] } else { C64::new(0.0, 0.0) };
        inside - alpha * mode_channels(&m, r).map(|c| c[0]).unwrap_or(0.0)
    });
    Ok(CurrentSpec::TeProfile { key: ch.key, r_in: 0.0, r_out: 1.0, profile })
}
