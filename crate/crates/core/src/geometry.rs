//! Radial blow-up maps and the pushforward of coefficients and vector fields.
//!
//! Every map here is radial, `x -> phi(|x|) x / |x|`, so its Jacobian has
//! the radial eigenvalue `phi'(r)` and the tangential eigenvalue `phi(r)/r`.
//! Jacobian convention: `(grad F)_{ij} = dF_i / dx_j`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CloakError, Result};

type C64 = Complex64;

/// A point in R^2 or R^3. Two-dimensional points leave the third slot at zero.
pub type Point = [f64; 3];

pub fn norm(x: &Point, dim: usize) -> f64 {
    x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Which one-sided branch to use when a radius sits exactly on a map interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Side {
    Inner,
    #[default]
    Outer,
}

/// A radial map `r -> phi(r)`.
pub trait RadialMap: Sync {
    fn dimension(&self) -> usize;
    /// `(phi(r), phi'(r))`, choosing `side` on interfaces.
    fn profile(&self, r: f64, side: Side) -> (f64, f64);
    fn inverse_radius(&self, s: f64) -> f64;

    fn map_forward(&self, x: &Point) -> Point {
        let d = self.dimension();
        let r = norm(x, d);
        if r == 0.0 {
            return [0.0; 3];
        }
        let (phi, _) = self.profile(r, Side::Outer);
        scale(x, phi / r, d)
    }

    fn map_inverse(&self, y: &Point) -> Point {
        let d = self.dimension();
        let s = norm(y, d);
        if s == 0.0 {
            return [0.0; 3];
        }
        scale(y, self.inverse_radius(s) / s, d)
    }
}

fn scale(x: &Point, c: f64, d: usize) -> Point {
    let mut out = [0.0; 3];
    for i in 0..d {
        out[i] = x[i] * c;
    }
    out
}

/// The map sending `B_rho` onto `B_1` and `B_2 \ B_rho` onto `B_2 \ B_1`,
/// identity outside `B_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupMap {
    rho: f64,
    dim: usize,
}

impl BlowupMap {
    pub fn new(rho: f64, dim: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 0.5) {
            return Err(CloakError::InvalidInput(format!("rho = {rho} not in (0, 1/2)")));
        }
        if dim != 2 && dim != 3 {
            return Err(CloakError::InvalidInput(format!("dimension {dim} not in {{2, 3}}")));
        }
        Ok(Self { rho, dim })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl RadialMap for BlowupMap {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn profile(&self, r: f64, side: Side) -> (f64, f64) {
        let rho = self.rho;
        let outer = side == Side::Outer;
        if r > 2.0 || (r == 2.0 && outer) {
            (r, 1.0)
        } else if r > rho || (r == rho && outer) {
            ((2.0 - 2.0 * rho) / (2.0 - rho) + r / (2.0 - rho), 1.0 / (2.0 - rho))
        } else {
            (r / rho, 1.0 / rho)
        }
    }

    fn inverse_radius(&self, s: f64) -> f64 {
        let rho = self.rho;
        if s >= 2.0 {
            s
        } else if s >= 1.0 {
            (2.0 - rho) * s - (2.0 - 2.0 * rho)
        } else {
            rho * s
        }
    }
}

/// Uniform dilation `x -> c x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dilation {
    pub factor: f64,
    pub dim: usize,
}

impl RadialMap for Dilation {
    fn dimension(&self) -> usize {
        self.dim
    }
    fn profile(&self, r: f64, _side: Side) -> (f64, f64) {
        (self.factor * r, self.factor)
    }
    fn inverse_radius(&self, s: f64) -> f64 {
        s / self.factor
    }
}

/// `outer ∘ inner`.
pub struct Composed<'a> {
    pub outer: &'a dyn RadialMap,
    pub inner: &'a dyn RadialMap,
}

impl RadialMap for Composed<'_> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
    fn profile(&self, r: f64, side: Side) -> (f64, f64) {
        let (g, dg) = self.inner.profile(r, side);
        let (f, df) = self.outer.profile(g, side);
        (f, df * dg)
    }
    fn inverse_radius(&self, s: f64) -> f64 {
        self.inner.inverse_radius(self.outer.inverse_radius(s))
    }
}

/// Jacobian of a radial map in its (radial, tangential) eigenbasis plus the
/// full matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialJacobian {
    pub radial: f64,
    pub tangential: f64,
    pub matrix: DMatrix<f64>,
}

impl RadialJacobian {
    pub fn determinant(&self, dim: usize) -> f64 {
        self.radial * self.tangential.powi(dim as i32 - 1)
    }
}

pub fn jacobian(map: &dyn RadialMap, x: &Point, side: Side) -> Result<RadialJacobian> {
    let d = map.dimension();
    let r = norm(x, d);
    if r == 0.0 {
        return Err(CloakError::DegenerateJacobian(*x));
    }
    let (phi, dphi) = map.profile(r, side);
    let tangential = phi / r;
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let proj = x[i] * x[j] / (r * r);
            let id = if i == j { 1.0 } else { 0.0 };
            m[(i, j)] = dphi * proj + tangential * (id - proj);
        }
    }
    Ok(RadialJacobian { radial: dphi, tangential, matrix: m })
}

/// Pushed-forward coefficient pair at `F(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub matrix: DMatrix<C64>,
    pub scalar: C64,
    /// Eigenvalues along `x/|x|` and orthogonal to it, valid when the input
    /// matrix is isotropic.
    pub radial: C64,
    pub tangential: C64,
}

/// `(grad F A grad F^T / |det grad F|, Sigma / |det grad F|)`.
pub fn pushforward_coeffs(
    map: &dyn RadialMap,
    a: &DMatrix<C64>,
    sigma: C64,
    x: &Point,
    side: Side,
) -> Result<CoefficientField> {
    let d = map.dimension();
    let jac = jacobian(map, x, side)?;
    let det = jac.determinant(d);
    if !(det > 0.0) || !det.is_finite() {
        return Err(CloakError::DegenerateJacobian(*x));
    }
    let j = jac.matrix.map(|v| C64::new(v, 0.0));
    let matrix = &j * a * j.transpose() / C64::new(det, 0.0);
    let iso = a[(0, 0)];
    Ok(CoefficientField {
        matrix,
        scalar: sigma / det,
        radial: iso * jac.radial * jac.radial / det,
        tangential: iso * jac.tangential * jac.tangential / det,
    })
}

/// `((grad F)^{-T} E) ∘ F^{-1}` evaluated at `y`.
pub fn pushforward_field(
    map: &dyn RadialMap,
    field: impl Fn(&Point) -> [C64; 3],
    y: &Point,
    side: Side,
) -> Result<[C64; 3]> {
    let d = map.dimension();
    let x = map.map_inverse(y);
    let jac = jacobian(map, &x, side)?;
    if jac.radial == 0.0 || jac.tangential == 0.0 {
        return Err(CloakError::DegenerateJacobian(x));
    }
    let e = field(&x);
    let r = norm(&x, d);
    // inverse transpose of a symmetric radial Jacobian: 1/phi' radially, r/phi tangentially
    let er: C64 = (0..d).map(|i| e[i] * x[i] / r).sum();
    let mut out = [C64::new(0.0, 0.0); 3];
    for i in 0..d {
        let radial_part = er * x[i] / r;
        out[i] = radial_part / jac.radial + (e[i] - radial_part) / jac.tangential;
    }
    Ok(out)
}
