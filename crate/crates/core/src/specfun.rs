//! Special functions for radial mode solutions.
//!
//! Cylindrical Bessel/Hankel functions `J_n`, `Y_n`, `H_n^(1)`, spherical
//! Bessel/Hankel functions `j_n`, `y_n`, `h_n^(1)`, Riccati-Bessel functions
//! `psi_n = z j_n`, `chi_n = -z y_n`, `xi_n = z h_n^(1) = psi_n - i chi_n`, and
//! associated Legendre functions together with the angular Mie functions.
//!
//! All Bessel families accept complex arguments. The regular functions are
//! obtained from a downward (Miller) ratio recurrence that is normalised
//! against closed forms, so they stay accurate at the small arguments
//! produced by the shrunken inclusions. The singular functions are obtained
//! by upward recurrence, which is stable for them.
//!
//! Associated Legendre functions are defined WITHOUT the Condon-Shortley
//! phase: `P_n^m(x) = (1 - x^2)^{m/2} d^m P_n / dx^m`, so `P_1^1 = sin(theta)`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{CloakError, Result};

type C64 = Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest `|Im z|` accepted before exponentials overflow.
pub const MAX_IMAG_ARG: f64 = 700.0;

/// Value and first derivative of a radial special function at one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub order: usize,
    pub argument: C64,
    pub value: C64,
    pub derivative: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CylKind {
    J,
    Y,
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphKind {
    J,
    Y,
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiccatiKind {
    /// `psi_n(z) = z j_n(z)`
    Psi,
    /// `chi_n(z) = -z y_n(z)`
    Chi,
    /// `xi_n(z) = z h_n^(1)(z)`
    Xi,
}

fn check_arg(z: C64, singular: bool) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(CloakError::SpecialFunction(format!("non-finite argument {z}")));
    }
    if z.im.abs() > MAX_IMAG_ARG {
        return Err(CloakError::SpecialFunction(format!(
            "|Im z| = {} exceeds {MAX_IMAG_ARG}; use the scaled variants",
            z.im.abs()
        )));
    }
    if singular && z.norm() == 0.0 {
        return Err(CloakError::SpecialFunction("singular function at z = 0".into()));
    }
    Ok(())
}

/// Starting order for the downward ratio recurrences.
fn miller_start(nmax: usize, z: C64) -> usize {
    let a = z.norm();
    nmax.max(a.ceil() as usize) + 30 + (4.0 * a.cbrt()).ceil() as usize + (a / 4.0) as usize
}

/// Unnormalised minimal solution `f_0 = 1, f_k = prod_{i<=k} r_i` of a
/// three-term recurrence, given the ratio recursion `r_k = z / (c(k) - z r_{k+1})`.
fn miller_sequence(kmax: usize, start: usize, z: C64, c: impl Fn(usize) -> f64) -> Vec<C64> {
    let mut ratios = vec![C64::new(0.0, 0.0); start + 2];
    let mut r = C64::new(0.0, 0.0);
    for k in (1..=start).rev() {
        let denom = C64::new(c(k), 0.0) - z * r;
        r = if denom.norm() == 0.0 {
            // exact zero of the lower order: nudge
            z / C64::new(c(k) * (1.0 + 1e-15) + 1e-300, 0.0)
        } else {
            z / denom
        };
        ratios[k] = r;
    }
    let mut f = Vec::with_capacity(kmax + 1);
    f.push(C64::new(1.0, 0.0));
    for k in 1..=kmax {
        let prev = f[k - 1];
        f.push(prev * ratios[k]);
    }
    f
}

/// Spherical Bessel `j_k(z)` for `k = 0..=nmax`.
pub fn sph_j_array(nmax: usize, z: C64) -> Result<Vec<C64>> {
    check_arg(z, false)?;
    if z.norm() == 0.0 {
        let mut v = vec![C64::new(0.0, 0.0); nmax + 1];
        v[0] = C64::new(1.0, 0.0);
        return Ok(v);
    }
    let start = miller_start(nmax + 1, z);
    let f = miller_sequence(nmax.max(1), start, z, |k| (2 * k + 1) as f64);
    let j0 = z.sin() / z;
    let scale = if z.norm() < 1.0 {
        j0 / f[0]
    } else {
        let j1 = z.sin() / (z * z) - z.cos() / z;
        // least-squares fit to both closed forms; robust near zeros of either
        (j0 * f[0].conj() + j1 * f[1].conj()) / (f[0].norm_sqr() + f[1].norm_sqr())
    };
    Ok(f.into_iter().take(nmax + 1).map(|v| v * scale).collect())
}

/// Spherical Hankel `h_k^(1)(z)` for `k = 0..=nmax` by upward recurrence.
pub fn sph_h1_array(nmax: usize, z: C64) -> Result<Vec<C64>> {
    check_arg(z, true)?;
    let i = C64::i();
    let e = (i * z).exp();
    let mut h = Vec::with_capacity(nmax + 1);
    h.push(-i * e / z);
    if nmax >= 1 {
        h.push(-e * (z + i) / (z * z));
    }
    for k in 1..nmax {
        let next = h[k] * (2 * k + 1) as f64 / z - h[k - 1];
        h.push(next);
    }
    Ok(h)
}

/// `e^{-iz} h_k^(1)(z)`: finite for large positive `Im z`.
pub fn sph_h1_scaled_array(nmax: usize, z: C64) -> Result<Vec<C64>> {
    if z.norm() == 0.0 {
        return Err(CloakError::SpecialFunction("singular function at z = 0".into()));
    }
    let i = C64::i();
    let mut h = Vec::with_capacity(nmax + 1);
    h.push(-i / z);
    if nmax >= 1 {
        h.push(-(z + i) / (z * z));
    }
    for k in 1..nmax {
        let next = h[k] * (2 * k + 1) as f64 / z - h[k - 1];
        h.push(next);
    }
    Ok(h)
}

fn with_derivatives_sph(order: usize, z: C64, vals: &[C64]) -> BesselEval {
    let value = vals[order];
    let derivative = if order == 0 { -vals[1] } else { vals[order - 1] - value * (order + 1) as f64 / z };
    BesselEval { order, argument: z, value, derivative }
}

/// Spherical Bessel/Hankel function of integer order with derivative.
pub fn sph_bessel(kind: SphKind, n: usize, z: C64) -> Result<BesselEval> {
    if kind == SphKind::J && z.norm() == 0.0 {
        let (value, derivative) = match n {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0 / 3.0),
            _ => (0.0, 0.0),
        };
        return Ok(BesselEval {
            order: n,
            argument: z,
            value: C64::new(value, 0.0),
            derivative: C64::new(derivative, 0.0),
        });
    }
    let vals = sph_values(kind, n + 1, z)?;
    Ok(with_derivatives_sph(n, z, &vals))
}

/// All orders `0..=nmax` of one spherical family.
pub fn sph_values(kind: SphKind, nmax: usize, z: C64) -> Result<Vec<C64>> {
    match kind {
        SphKind::J => sph_j_array(nmax, z),
        SphKind::H1 => sph_h1_array(nmax, z),
        SphKind::Y => {
            let j = sph_j_array(nmax, z)?;
            let h = sph_h1_array(nmax, z)?;
            Ok(j.iter().zip(&h).map(|(j, h)| -C64::i() * (h - j)).collect())
        }
    }
}

/// Riccati-Bessel function with derivative with respect to `z`.
pub fn riccati(kind: RiccatiKind, n: usize, z: C64) -> Result<BesselEval> {
    let sk = match kind {
        RiccatiKind::Psi => SphKind::J,
        RiccatiKind::Chi => SphKind::Y,
        RiccatiKind::Xi => SphKind::H1,
    };
    if kind == RiccatiKind::Psi && z.norm() == 0.0 {
        let d = if n == 0 { 1.0 } else { 0.0 };
        return Ok(BesselEval { order: n, argument: z, value: C64::new(0.0, 0.0), derivative: C64::new(d, 0.0) });
    }
    if kind != RiccatiKind::Psi {
        check_arg(z, true)?;
    }
    let b = sph_bessel(sk, n, z)?;
    let sign = if kind == RiccatiKind::Chi { -1.0 } else { 1.0 };
    Ok(BesselEval { order: n, argument: z, value: sign * z * b.value, derivative: sign * (b.value + z * b.derivative) })
}

// ---------------------------------------------------------------------------
// cylindrical

/// Cylindrical `J_k(z)` for `k = 0..=kmax`.
pub fn cyl_j_array(kmax: usize, z: C64) -> Result<Vec<C64>> {
    check_arg(z, false)?;
    if z.norm() == 0.0 {
        let mut v = vec![C64::new(0.0, 0.0); kmax + 1];
        v[0] = C64::new(1.0, 0.0);
        return Ok(v);
    }
    let start = miller_start(kmax, z);
    let f = miller_sequence(start, start, z, |k| (2 * k) as f64);
    // Jacobi-Anger at theta = pi (or 0): e^{-iz} = J_0 + 2 sum (-i)^k J_k
    let (phase, target) =
        if z.im >= 0.0 { (-C64::i(), (-C64::i() * z).exp()) } else { (C64::i(), (C64::i() * z).exp()) };
    let mut sum = f[0];
    let mut p = C64::new(1.0, 0.0);
    for fk in f.iter().skip(1) {
        p *= phase;
        sum += 2.0 * p * fk;
    }
    let scale = target / sum;
    Ok(f.into_iter().take(kmax + 1).map(|v| v * scale).collect())
}

fn hankel_asymptotic(nu: f64, z: C64) -> C64 {
    let mu = 4.0 * nu * nu;
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kk = k as f64;
        term = term * C64::i() * (mu - (2.0 * kk - 1.0).powi(2)) / (kk * 8.0 * z);
        let t = term.norm();
        if t > last {
            break;
        }
        sum += term;
        last = t;
        if t < 1e-17 * sum.norm() {
            break;
        }
    }
    let phase = z - nu * PI / 2.0 - PI / 4.0;
    (2.0 / (PI * z)).sqrt() * (C64::i() * phase).exp() * sum
}

/// `(J_0..J_nmax, Y_0..Y_nmax)`.
fn cyl_jy_arrays(nmax: usize, z: C64) -> Result<(Vec<C64>, Vec<C64>)> {
    check_arg(z, true)?;
    let nm = nmax.max(1);
    let a = z.norm();
    let (j_all, y0, y1) = if a <= 20.0 {
        let kmax = miller_start(nm, z);
        let j = cyl_j_array(kmax, z)?;
        let lg = (z / 2.0).ln() + EULER_GAMMA;
        let mut s0 = C64::new(0.0, 0.0);
        let mut s1 = C64::new(0.0, 0.0);
        let mut k = 1;
        while 2 * k < kmax {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s0 += sign * j[2 * k] / k as f64;
            s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
            k += 1;
        }
        let y0 = (2.0 / PI) * lg * j[0] - (4.0 / PI) * s0;
        let y1 = (2.0 / PI) * (lg * j[1] - j[0] / z) + (2.0 / PI) * s1;
        (j, y0, y1)
    } else {
        let j = cyl_j_array(nm, z)?;
        let h0 = hankel_asymptotic(0.0, z);
        let h1 = hankel_asymptotic(1.0, z);
        let y0 = -C64::i() * (h0 - j[0]);
        let y1 = -C64::i() * (h1 - j[1]);
        (j, y0, y1)
    };
    let mut y = Vec::with_capacity(nm + 1);
    y.push(y0);
    y.push(y1);
    for k in 1..nm {
        let next = y[k] * (2 * k) as f64 / z - y[k - 1];
        y.push(next);
    }
    let j: Vec<C64> = j_all.into_iter().take(nm + 1).collect();
    Ok((j, y))
}

/// All orders `0..=nmax` of one cylindrical family.
pub fn cyl_values(kind: CylKind, nmax: usize, z: C64) -> Result<Vec<C64>> {
    match kind {
        CylKind::J => cyl_j_array(nmax, z),
        CylKind::Y => Ok(cyl_jy_arrays(nmax, z)?.1.into_iter().take(nmax + 1).collect()),
        CylKind::H1 => {
            let (j, y) = cyl_jy_arrays(nmax, z)?;
            Ok(j.iter().zip(&y).take(nmax + 1).map(|(j, y)| j + C64::i() * y).collect())
        }
    }
}

/// Cylindrical Bessel/Hankel function of integer order with derivative.
pub fn cyl_bessel(kind: CylKind, n: usize, z: C64) -> Result<BesselEval> {
    if kind == CylKind::J && z.norm() == 0.0 {
        let value = if n == 0 { 1.0 } else { 0.0 };
        let derivative = if n == 1 { 0.5 } else { 0.0 };
        return Ok(BesselEval {
            order: n,
            argument: z,
            value: C64::new(value, 0.0),
            derivative: C64::new(derivative, 0.0),
        });
    }
    let vals = cyl_values(kind, n + 1, z)?;
    let value = vals[n];
    let derivative = if n == 0 { -vals[1] } else { vals[n - 1] - value * n as f64 / z };
    Ok(BesselEval { order: n, argument: z, value, derivative })
}

// ---------------------------------------------------------------------------
// angular functions

/// Associated Legendre value with the angular derivatives used by vector
/// spherical harmonics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreEval {
    /// `P_n^m(cos theta)`
    pub p: f64,
    /// `P_n^m(cos theta) / sin theta` (finite limit at the poles for `m >= 1`;
    /// zero for `m = 0`, where it is only ever used multiplied by `m`)
    pub p_over_sin: f64,
    /// `d P_n^m(cos theta) / d theta`
    pub dp_dtheta: f64,
}

/// `P_n^m(cos theta)` without the Condon-Shortley phase, plus `P/sin` and
/// `dP/dtheta`.
pub fn legendre_angular(n: usize, m: usize, theta: f64) -> Result<LegendreEval> {
    if m > n {
        return Err(CloakError::InvalidInput(format!("|m| = {m} > n = {n}")));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(CloakError::InvalidInput(format!("theta = {theta} outside [0, pi]")));
    }
    let x = theta.cos();
    let s = theta.sin();
    if m == 0 {
        let p = legendre_p_column(n, 0, x);
        let p1 = if n >= 1 { legendre_p_column(n, 1, x)[n] * s } else { 0.0 };
        return Ok(LegendreEval { p: p[n], p_over_sin: 0.0, dp_dtheta: -p1 });
    }
    // Q_k = P_k^m / sin, seeded with (2m-1)!! sin^{m-1}
    let q = legendre_p_column(n, m, x);
    let q_n = q[n];
    let q_nm1 = if n > m { q[n - 1] } else { 0.0 };
    Ok(LegendreEval { p: q_n * s, p_over_sin: q_n, dp_dtheta: n as f64 * x * q_n - (n + m) as f64 * q_nm1 })
}

/// `P_k^m(x) / sin` for `k = 0..=n` when `m >= 1`, and `P_k(x)` when `m = 0`.
/// Entries with `k < m` are zero.
fn legendre_p_column(n: usize, m: usize, x: f64) -> Vec<f64> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut out = vec![0.0; n + 1];
    if m > n {
        return out;
    }
    // seed P_m^m (divided by sin when m >= 1)
    let mut seed = 1.0;
    for k in 1..=m {
        seed *= (2 * k - 1) as f64;
    }
    if m >= 1 {
        seed *= s.powi(m as i32 - 1);
    }
    out[m] = seed;
    if n > m {
        out[m + 1] = x * (2 * m + 1) as f64 * seed;
    }
    for k in (m + 2)..=n {
        out[k] = (x * (2 * k - 1) as f64 * out[k - 1] - (k + m - 1) as f64 * out[k - 2]) / (k - m) as f64;
    }
    out
}

/// Angular Mie functions `pi_n = P_n^1 / sin`, `tau_n = dP_n^1/dtheta`.
pub fn mie_pi_tau(n: usize, theta: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let l = legendre_angular(n, 1, theta)?;
    Ok((l.p_over_sin, l.dp_dtheta))
}

/// `int_{S^2} (P_n^m cos(m phi))^2 dOmega` (the same for `sin` when `m >= 1`).
pub fn sph_angular_norm_sq(n: usize, m: usize) -> f64 {
    let mut ratio = 1.0;
    for k in (n - m + 1)..=(n + m) {
        ratio *= k as f64;
    }
    let phi = if m == 0 { 2.0 * PI } else { PI };
    phi * 2.0 / (2 * n + 1) as f64 * ratio
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(npts: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(npts);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for i in 0..npts {
        let mut x = (PI * (i as f64 + 0.75) / (npts as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=npts {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = npts as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((mid - half * x, half * w));
    }
    out
}

/// Composite Gauss-Legendre rule with `panels` equal panels of `order` points.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let base = gauss_legendre(order, -1.0, 1.0);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(x, w) in &base {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mut flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn j0_at_zero_is_one() {
        let b = cyl_bessel(CylKind::J, 0, c(0.0, 0.0)).unwrap();
        assert_eq!(b.value, c(1.0, 0.0));
    }

    #[test]
    fn cylindrical_wronskian() {
        let z = c(3.7, 0.0);
        for n in 0..=8 {
            let j = cyl_bessel(CylKind::J, n, z).unwrap();
            let y = cyl_bessel(CylKind::Y, n, z).unwrap();
            let w = j.value * y.derivative - j.derivative * y.value;
            assert!((w - 2.0 / (PI * z)).norm() < 1e-12, "n={n} w={w}");
        }
    }

    #[test]
    fn cylindrical_reference_values() {
        // A&S tables
        let j = cyl_bessel(CylKind::J, 0, c(1.0, 0.0)).unwrap().value;
        assert!((j.re - 0.765_197_686_557_966_6).abs() < 1e-14);
        let y = cyl_bessel(CylKind::Y, 0, c(1.0, 0.0)).unwrap().value;
        assert!((y.re - 0.088_256_964_215_676_96).abs() < 1e-14, "{y}");
        let y1 = cyl_bessel(CylKind::Y, 1, c(1.0, 0.0)).unwrap().value;
        assert!((y1.re + 0.781_212_821_300_288_7).abs() < 1e-14, "{y1}");
        let y5 = cyl_bessel(CylKind::Y, 0, c(30.0, 0.0)).unwrap().value;
        assert!((y5.re + 0.117_295_731_686_663_98).abs() < 1e-13, "{y5}");
    }

    #[test]
    fn h1_is_j_plus_iy() {
        for &z in &[c(0.3, 0.0), c(2.0, 0.5), c(25.0, 0.1)] {
            for n in 0..6 {
                let j = cyl_bessel(CylKind::J, n, z).unwrap().value;
                let y = cyl_bessel(CylKind::Y, n, z).unwrap().value;
                let h = cyl_bessel(CylKind::H1, n, z).unwrap().value;
                assert!((h - (j + C64::i() * y)).norm() <= 1e-14 * h.norm());
            }
        }
    }

    #[test]
    fn first_zero_of_j0() {
        let root = bisect(2.0, 3.0, |x| cyl_bessel(CylKind::J, 0, c(x, 0.0)).unwrap().value.re);
        assert!((root - 2.404_825_557_695_773).abs() < 1e-12);
    }

    #[test]
    fn spherical_closed_forms() {
        let j = sph_bessel(SphKind::J, 0, c(PI, 0.0)).unwrap();
        assert!(j.value.norm() < 1e-15);
        let z = c(1.0, 0.5);
        let h = sph_bessel(SphKind::H1, 0, z).unwrap().value;
        let exact = -C64::i() * (C64::i() * z).exp() / z;
        assert!((h - exact).norm() < 1e-13);
    }

    #[test]
    fn spherical_wronskian() {
        let z = c(2.3, 0.0);
        for n in 0..=8 {
            let j = sph_bessel(SphKind::J, n, z).unwrap();
            let y = sph_bessel(SphKind::Y, n, z).unwrap();
            let w = j.value * y.derivative - j.derivative * y.value;
            assert!((w - 1.0 / (z * z)).norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn riccati_identities() {
        let z = c(0.7, 0.2);
        assert!((riccati(RiccatiKind::Psi, 0, z).unwrap().value - z.sin()).norm() < 1e-15);
        let z = c(4.1, 0.0);
        for n in 0..=6 {
            let psi = riccati(RiccatiKind::Psi, n, z).unwrap();
            let chi = riccati(RiccatiKind::Chi, n, z).unwrap();
            let xi = riccati(RiccatiKind::Xi, n, z).unwrap();
            assert!((xi.value - (psi.value - C64::i() * chi.value)).norm() < 1e-12);
            let w = psi.value * xi.derivative - psi.derivative * xi.value;
            assert!((w - C64::i()).norm() < 1e-11, "n={n} w={w}");
        }
    }

    #[test]
    fn small_argument_series_agreement() {
        // j_n(z) ~ z^n / (2n+1)!! for tiny z
        let z = c(1e-3, 0.0);
        let j = sph_j_array(10, z).unwrap();
        let mut df = 1.0;
        for (n, v) in j.iter().enumerate() {
            df *= (2 * n + 1) as f64;
            let approx = 1e-3f64.powi(n as i32) / df;
            assert!((v.re / approx - 1.0).abs() < 1e-6, "n={n}");
        }
    }

    #[test]
    fn downward_and_upward_agree_where_both_stable() {
        // upward recurrence of j is stable for n < |z|
        let z = c(30.0, 0.0);
        let down = sph_j_array(20, z).unwrap();
        let mut up = vec![z.sin() / z, z.sin() / (z * z) - z.cos() / z];
        for k in 1..20 {
            let next = up[k] * (2 * k + 1) as f64 / z - up[k - 1];
            up.push(next);
        }
        for n in 0..=20 {
            assert!((down[n] - up[n]).norm() < 1e-9);
        }
    }

    #[test]
    fn wronskian_grid() {
        let radii = [1e-3, 0.1, 1.0, 7.5, 20.0, 50.0];
        let phases = [0.0, 0.3, 1.2];
        for &a in &radii {
            for &ph in &phases {
                let z = C64::from_polar(a, ph);
                let j = sph_j_array(41, z).unwrap();
                let h = sph_h1_array(41, z).unwrap();
                for n in (0..=40).step_by(5) {
                    let jd = if n == 0 { -j[1] } else { j[n - 1] - j[n] * (n + 1) as f64 / z };
                    let hd = if n == 0 { -h[1] } else { h[n - 1] - h[n] * (n + 1) as f64 / z };
                    let w = j[n] * hd - jd * h[n];
                    let expect = C64::i() / (z * z);
                    let scale = (j[n] * hd).norm() + (jd * h[n]).norm();
                    assert!((w - expect).norm() <= 1e-11 * scale.max(expect.norm()), "a={a} ph={ph} n={n}");
                }
            }
        }
    }

    #[test]
    fn legendre_low_orders() {
        for &t in &[0.0, 0.4, 1.3, PI] {
            let l = legendre_angular(1, 0, t).unwrap();
            assert!((l.p - t.cos()).abs() < 1e-15);
            let (p, tau) = mie_pi_tau(1, t).unwrap();
            assert!((p - 1.0).abs() < 1e-15);
            assert!((tau - t.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn legendre_orthogonality() {
        let q = composite_gauss(0.0, PI, 8, 16);
        for n in 0..=6 {
            for k in 0..=6 {
                let s: f64 = q
                    .iter()
                    .map(|&(t, w)| {
                        legendre_angular(n, 0, t).unwrap().p * legendre_angular(k, 0, t).unwrap().p * t.sin() * w
                    })
                    .sum();
                let expect = if n == k { 2.0 / (2 * n + 1) as f64 } else { 0.0 };
                assert!((s - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn legendre_derivative_matches_finite_difference() {
        for n in 1..6 {
            for m in 0..=n {
                let t = 0.7;
                let h = 1e-6;
                let l = legendre_angular(n, m, t).unwrap();
                let fd =
                    (legendre_angular(n, m, t + h).unwrap().p - legendre_angular(n, m, t - h).unwrap().p) / (2.0 * h);
                assert!((l.dp_dtheta - fd).abs() < 1e-6, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert!(sph_bessel(SphKind::J, 0, c(1.0, 800.0)).is_err());
        assert!(sph_h1_scaled_array(3, c(1.0, 800.0)).is_ok());
    }
}
