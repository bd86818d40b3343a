//! Per-mode radial solver shared by the acoustic and electromagnetic models.
//!
//! Every mode reduces to `(P u')' + Q u = H` on `(0, inf)` with `u` and the
//! flux `P u'` continuous across interfaces. Constant layers use Bessel-type
//! bases; radial-profile layers are integrated numerically and split into
//! shooting segments whenever the fundamental matrix grows too fast. All
//! segments are coupled in one block linear system.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use ode_solvers::{Dop853, OutputType, SVector, System};

use crate::error::{CloakError, Result};
use crate::specfun::{composite_gauss, cyl_bessel, riccati, sph_bessel, CylKind, RiccatiKind, SphKind};

type C64 = Complex64;

const ODE_RTOL: f64 = 1e-12;
const ODE_ATOL: f64 = 1e-15;
/// Growth of the fundamental matrix that triggers a new shooting node.
const SEGMENT_GROWTH: f64 = 1e3;
/// Largest acceptable pivot ratio of the equilibrated system.
pub const MAX_CONDITION: f64 = 1e15;

/// Which Bessel family solves the constant-coefficient equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Weight `r^2`; `j_n`, `y_n`, `h_n`.
    Spherical,
    /// Weight `r`; `J_n`, `Y_n`, `H_n`.
    Cylindrical,
    /// Weight 1; `psi_n`, `z y_n`, `xi_n`.
    Riccati,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Regular,
    Second,
    Outgoing,
}

impl Family {
    pub fn weight(self, r: f64) -> f64 {
        match self {
            Family::Spherical => r * r,
            Family::Cylindrical => r,
            Family::Riccati => 1.0,
        }
    }

    /// Value and `d/dz` of the basis function at `z`.
    pub fn eval(self, kind: BasisKind, n: usize, z: C64) -> Result<(C64, C64)> {
        let e = match (self, kind) {
            (Family::Spherical, BasisKind::Regular) => sph_bessel(SphKind::J, n, z)?,
            (Family::Spherical, BasisKind::Second) => sph_bessel(SphKind::Y, n, z)?,
            (Family::Spherical, BasisKind::Outgoing) => sph_bessel(SphKind::H1, n, z)?,
            (Family::Cylindrical, BasisKind::Regular) => cyl_bessel(CylKind::J, n, z)?,
            (Family::Cylindrical, BasisKind::Second) => cyl_bessel(CylKind::Y, n, z)?,
            (Family::Cylindrical, BasisKind::Outgoing) => cyl_bessel(CylKind::H1, n, z)?,
            (Family::Riccati, BasisKind::Regular) => riccati(RiccatiKind::Psi, n, z)?,
            (Family::Riccati, BasisKind::Second) => {
                let c = riccati(RiccatiKind::Chi, n, z)?;
                return Ok((-c.value, -c.derivative));
            }
            (Family::Riccati, BasisKind::Outgoing) => riccati(RiccatiKind::Xi, n, z)?,
        };
        Ok((e.value, e.derivative))
    }

    /// `P (phi1 phi2' - phi1' phi2)` for the pair (Regular, `second`) in a
    /// layer with flux coefficient `c` and wavenumber `k`.
    pub fn wronskian(self, second: BasisKind, c: C64, k: C64) -> C64 {
        let base = match self {
            Family::Spherical => c / k,
            Family::Cylindrical => c * (2.0 / std::f64::consts::PI),
            Family::Riccati => c * k,
        };
        match second {
            BasisKind::Outgoing => base * C64::i(),
            _ => base,
        }
    }
}

/// `r -> (P(r), Q(r))`.
pub type ProfileFn = Arc<dyn Fn(f64) -> (C64, C64) + Send + Sync>;
/// `r -> H(r)`.
pub type SourceFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum LayerCoeff {
    /// `P = flux * weight(r)` and `Q = flux * weight(r) * (k^2 - l(l+..)/r^2)`.
    Constant {
        flux: C64,
        k: C64,
    },
    Profile(ProfileFn),
}

impl std::fmt::Debug for LayerCoeff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LayerCoeff::Constant { flux, k } => write!(f, "Constant {{ flux: {flux}, k: {k} }}"),
            LayerCoeff::Profile(_) => write!(f, "Profile"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub r_in: f64,
    pub r_out: f64,
    pub coeff: LayerCoeff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Core {
    /// Solution bounded at the origin.
    Regular,
    /// `u = 0` at the inner radius of the first layer.
    Dirichlet,
}

#[derive(Clone)]
pub enum RadialSource {
    Distributed { a: f64, b: f64, h: SourceFn },
    Delta { r0: f64, weight: C64 },
}

impl std::fmt::Debug for RadialSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadialSource::Distributed { a, b, .. } => write!(f, "Distributed [{a}, {b}]"),
            RadialSource::Delta { r0, weight } => write!(f, "Delta at {r0} x {weight}"),
        }
    }
}

impl RadialSource {
    fn span(&self) -> (f64, f64) {
        match self {
            RadialSource::Distributed { a, b, .. } => (*a, *b),
            RadialSource::Delta { r0, .. } => (*r0, *r0),
        }
    }
}

/// One radial mode problem.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub family: Family,
    pub order: usize,
    pub core: Core,
    /// Contiguous layers; the last one extends to infinity and is constant.
    pub layers: Vec<Layer>,
    pub sources: Vec<RadialSource>,
    /// Amplitude of the regular exterior basis function at infinity.
    pub incident: C64,
}

#[derive(Clone)]
enum SegmentKind {
    Constant { flux: C64, k: C64, second: BasisKind, wronskian: C64 },
    Profile { f: ProfileFn, transfer: [[C64; 2]; 2] },
}

#[derive(Clone)]
struct Segment {
    r_in: f64,
    r_out: f64,
    kind: SegmentKind,
    sources: Vec<RadialSource>,
}

/// Solved radial mode: one coefficient pair per segment.
#[derive(Clone)]
pub struct RadialSolution {
    family: Family,
    order: usize,
    segments: Vec<Segment>,
    coeffs: Vec<[C64; 2]>,
    /// Pivot ratio of the equilibrated block system.
    pub condition: f64,
}

impl std::fmt::Debug for RadialSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialSolution")
            .field("order", &self.order)
            .field("segments", &self.segments.len())
            .field("coeffs", &self.coeffs)
            .field("condition", &self.condition)
            .finish()
    }
}

fn angular_eigen(family: Family, n: usize) -> f64 {
    let n = n as f64;
    match family {
        Family::Cylindrical => n * n,
        _ => n * (n + 1.0),
    }
}

struct ProfileSystem {
    f: ProfileFn,
    limit: f64,
    stopped: bool,
}

// The radius rides along as state component 8: the stepper mishandles the
// independent variable of non-autonomous systems and degrades to low order.
impl System<f64, SVector<f64, 9>> for ProfileSystem {
    fn system(&self, _t: f64, y: &SVector<f64, 9>, dy: &mut SVector<f64, 9>) {
        let (p, q) = (self.f)(y[8]);
        for col in 0..2 {
            let o = 4 * col;
            let u = C64::new(y[o], y[o + 1]);
            let flux = C64::new(y[o + 2], y[o + 3]);
            let du = flux / p;
            let dflux = -q * u;
            dy[o] = du.re;
            dy[o + 1] = du.im;
            dy[o + 2] = dflux.re;
            dy[o + 3] = dflux.im;
        }
        dy[8] = 1.0;
    }

    fn solout(&mut self, _t: f64, y: &SVector<f64, 9>, _dy: &SVector<f64, 9>) -> bool {
        if y.rows(0, 8).amax() > self.limit {
            self.stopped = true;
        }
        self.stopped
    }
}

fn pack(cols: &[[C64; 2]; 2], r: f64) -> SVector<f64, 9> {
    let mut y = SVector::<f64, 9>::zeros();
    y[8] = r;
    for c in 0..2 {
        y[4 * c] = cols[c][0].re;
        y[4 * c + 1] = cols[c][0].im;
        y[4 * c + 2] = cols[c][1].re;
        y[4 * c + 3] = cols[c][1].im;
    }
    y
}

fn unpack(y: &SVector<f64, 9>) -> [[C64; 2]; 2] {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for c in 0..2 {
        out[c][0] = C64::new(y[4 * c], y[4 * c + 1]);
        out[c][1] = C64::new(y[4 * c + 2], y[4 * c + 3]);
    }
    out
}

/// Integrates two state columns from `a` towards `b`, stopping early when
/// any entry exceeds `limit`. Returns the radius reached and the columns.
fn integrate_columns(f: &ProfileFn, a: f64, b: f64, cols: [[C64; 2]; 2], limit: f64) -> Result<(f64, [[C64; 2]; 2])> {
    if a == b {
        return Ok((b, cols));
    }
    let sys = ProfileSystem { f: f.clone(), limit, stopped: false };
    let mut solver = Dop853::from_param(
        sys,
        0.0,
        b - a,
        0.0,
        pack(&cols, a),
        ODE_RTOL,
        ODE_ATOL,
        0.9,
        0.0,
        0.333,
        6.0,
        b - a,
        0.0,
        1_000_000,
        u32::MAX,
        OutputType::Sparse,
    );
    solver.integrate().map_err(|e| CloakError::Integration { radius: a, detail: e.to_string() })?;
    let y = solver.y_out().last().ok_or(CloakError::Integration { radius: a, detail: "no accepted step".into() })?;
    Ok((y[8], unpack(y)))
}

fn split_profile(f: &ProfileFn, a: f64, b: f64) -> Result<Vec<Segment>> {
    let mut out = Vec::new();
    let mut start = a;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    while start < b {
        let (end, cols) = integrate_columns(f, start, b, [[one, zero], [zero, one]], SEGMENT_GROWTH)?;
        if !(end > start) {
            return Err(CloakError::Integration { radius: start, detail: "no progress".into() });
        }
        // snap tiny remainders onto the layer end
        let end = if b - end < 1e-12 * b { b } else { end };
        let transfer = [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]];
        out.push(Segment {
            r_in: start,
            r_out: end,
            kind: SegmentKind::Profile { f: f.clone(), transfer },
            sources: Vec::new(),
        });
        start = end;
    }
    Ok(out)
}

impl Segment {
    fn flux_weight(&self, family: Family, r: f64) -> C64 {
        match &self.kind {
            SegmentKind::Constant { flux, .. } => flux * family.weight(r),
            SegmentKind::Profile { f, .. } => f(r).0,
        }
    }

    /// Columns `(u, P u')` of the two basis functions at `r`.
    fn basis(&self, family: Family, n: usize, r: f64) -> Result<[[C64; 2]; 2]> {
        match &self.kind {
            SegmentKind::Constant { flux, k, second, .. } => {
                let z = k * r;
                let p = flux * family.weight(r);
                let (v1, d1) = family.eval(BasisKind::Regular, n, z)?;
                let (v2, d2) = family.eval(*second, n, z)?;
                Ok([[v1, p * k * d1], [v2, p * k * d2]])
            }
            SegmentKind::Profile { .. } => {
                Err(CloakError::InvalidInput("profile segments have no closed-form basis".into()))
            }
        }
    }

    /// Coefficient shift from sources on `[r_in, r]`.
    fn source_shift(&self, family: Family, n: usize, r: f64) -> Result<[C64; 2]> {
        let mut i1 = C64::new(0.0, 0.0);
        let mut i2 = C64::new(0.0, 0.0);
        let SegmentKind::Constant { k, second, wronskian, .. } = &self.kind else {
            return Ok([i1, i2]);
        };
        for src in &self.sources {
            match src {
                RadialSource::Delta { r0, weight } => {
                    if r >= *r0 {
                        let z = k * r0;
                        i1 += weight * family.eval(BasisKind::Regular, n, z)?.0;
                        i2 += weight * family.eval(*second, n, z)?.0;
                    }
                }
                RadialSource::Distributed { a, b, h } => {
                    let top = r.min(*b);
                    if top <= *a {
                        continue;
                    }
                    for (s, w) in source_nodes(*a, top, k.norm()) {
                        let z = k * s;
                        let hv = h(s) * w;
                        i1 += hv * family.eval(BasisKind::Regular, n, z)?.0;
                        i2 += hv * family.eval(*second, n, z)?.0;
                    }
                }
            }
        }
        Ok([-i2 / wronskian, i1 / wronskian])
    }
}

/// Gauss nodes for source integrals; graded towards the origin when the
/// interval starts there so that singular second-kind bases integrate well.
fn source_nodes(a: f64, b: f64, k: f64) -> Vec<(f64, f64)> {
    let panels = ((b - a) * (k + 1.0) * 2.0).ceil().max(2.0) as usize;
    if a > 0.0 {
        return composite_gauss(a, b, panels, 20);
    }
    let mut nodes = Vec::new();
    let mut lo = b * 0.5f64.powi(30);
    nodes.extend(composite_gauss(0.0, lo, 1, 20));
    while lo < b * 0.5 {
        nodes.extend(composite_gauss(lo, 2.0 * lo, 1, 20));
        lo *= 2.0;
    }
    nodes.extend(composite_gauss(lo, b, panels, 20));
    nodes
}

fn check_layers(p: &RadialProblem) -> Result<()> {
    if p.layers.is_empty() {
        return Err(CloakError::InvalidInput("medium has no layers".into()));
    }
    let first = &p.layers[0];
    if p.core == Core::Regular && first.r_in != 0.0 {
        return Err(CloakError::InvalidInput("innermost layer must start at 0".into()));
    }
    if p.core == Core::Dirichlet && !(first.r_in > 0.0) {
        return Err(CloakError::InvalidInput("Dirichlet core needs a positive radius".into()));
    }
    for w in p.layers.windows(2) {
        if w[0].r_out != w[1].r_in || !(w[0].r_out > w[0].r_in) {
            return Err(CloakError::InvalidInput(format!("layers not contiguous at r = {}", w[0].r_out)));
        }
    }
    let last = p.layers.last().unwrap();
    if last.r_out != f64::INFINITY || !matches!(last.coeff, LayerCoeff::Constant { .. }) {
        return Err(CloakError::InvalidInput("outermost layer must be constant and unbounded".into()));
    }
    Ok(())
}

/// Solves one radial mode.
pub fn solve(problem: &RadialProblem) -> Result<RadialSolution> {
    check_layers(problem)?;
    let family = problem.family;
    let n = problem.order;
    let nl = problem.layers.len();

    let mut segments = Vec::new();
    for (i, layer) in problem.layers.iter().enumerate() {
        match &layer.coeff {
            LayerCoeff::Constant { flux, k } => {
                let second = if i + 1 == nl { BasisKind::Outgoing } else { BasisKind::Second };
                segments.push(Segment {
                    r_in: layer.r_in,
                    r_out: layer.r_out,
                    kind: SegmentKind::Constant {
                        flux: *flux,
                        k: *k,
                        second,
                        wronskian: family.wronskian(second, *flux, *k),
                    },
                    sources: Vec::new(),
                });
            }
            LayerCoeff::Profile(f) => {
                if !(layer.r_in > 0.0) {
                    return Err(CloakError::InvalidInput("profile layers must stay away from the origin".into()));
                }
                segments.extend(split_profile(f, layer.r_in, layer.r_out)?);
            }
        }
    }

    for src in &problem.sources {
        let (a, b) = src.span();
        let seg = segments
            .iter_mut()
            .find(|s| a >= s.r_in && b <= s.r_out && (a < s.r_out || s.r_out == f64::INFINITY))
            .ok_or_else(|| CloakError::InvalidInput(format!("source on [{a}, {b}] straddles a layer interface")))?;
        if !matches!(seg.kind, SegmentKind::Constant { .. }) {
            return Err(CloakError::InvalidInput("sources inside profile layers are not supported".into()));
        }
        seg.sources.push(src.clone());
    }

    let ns = segments.len();
    let dim = 2 * ns;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    let mut rhs = nalgebra::DVector::<C64>::zeros(dim);

    // inner condition
    match problem.core {
        Core::Regular => {
            if !matches!(segments[0].kind, SegmentKind::Constant { .. }) {
                return Err(CloakError::InvalidInput("innermost layer must be constant".into()));
            }
            m[(0, 1)] = one;
        }
        Core::Dirichlet => {
            let s = &segments[0];
            match s.kind {
                SegmentKind::Constant { .. } => {
                    let b = s.basis(family, n, s.r_in)?;
                    m[(0, 0)] = b[0][0];
                    m[(0, 1)] = b[1][0];
                }
                SegmentKind::Profile { .. } => m[(0, 0)] = one,
            }
        }
    }

    // interfaces
    for i in 0..ns - 1 {
        let (left, right) = (&segments[i], &segments[i + 1]);
        let r = left.r_out;
        let (tl, gl) = match &left.kind {
            SegmentKind::Constant { .. } => {
                let b = left.basis(family, n, r)?;
                let d = left.source_shift(family, n, r)?;
                let g = [b[0][0] * d[0] + b[1][0] * d[1], b[0][1] * d[0] + b[1][1] * d[1]];
                ([[b[0][0], b[1][0]], [b[0][1], b[1][1]]], g)
            }
            SegmentKind::Profile { transfer, .. } => (*transfer, [zero, zero]),
        };
        let tr = match &right.kind {
            SegmentKind::Constant { .. } => {
                let b = right.basis(family, n, r)?;
                [[b[0][0], b[1][0]], [b[0][1], b[1][1]]]
            }
            SegmentKind::Profile { .. } => [[one, zero], [zero, one]],
        };
        for row in 0..2 {
            let ri = 1 + 2 * i + row;
            for col in 0..2 {
                m[(ri, 2 * i + col)] = tl[row][col];
                m[(ri, 2 * i + 2 + col)] = -tr[row][col];
            }
            rhs[ri] = -gl[row];
        }
    }

    // radiation condition: regular amplitude at infinity equals the incident one
    let ext = &segments[ns - 1];
    let shift = ext.source_shift(family, n, f64::INFINITY)?;
    m[(dim - 1, dim - 2)] = one;
    rhs[dim - 1] = problem.incident - shift[0];

    // the singular core coefficient is eliminated rather than pinned to zero,
    // since round-off in it would dominate the field near the origin
    let regular = problem.core == Core::Regular;
    let (m, rhs) = if regular { (m.remove_row(0).remove_column(1), rhs.remove_row(0)) } else { (m, rhs) };
    let (x, condition) = solve_equilibrated(m, rhs).map_err(|(condition, detail)| CloakError::Conditioning {
        mode: n,
        condition,
        detail,
    })?;
    let x = if regular { x.insert_row(1, zero) } else { x };
    let coeffs = (0..ns).map(|i| [x[2 * i], x[2 * i + 1]]).collect();
    Ok(RadialSolution { family, order: n, segments, coeffs, condition })
}

fn solve_equilibrated(
    mut m: DMatrix<C64>,
    mut rhs: nalgebra::DVector<C64>,
) -> std::result::Result<(nalgebra::DVector<C64>, f64), (f64, String)> {
    let dim = m.nrows();
    for i in 0..dim {
        let s = m.row(i).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !(s > 0.0) || !s.is_finite() {
            return Err((f64::INFINITY, format!("row {i} is zero or non-finite")));
        }
        for j in 0..dim {
            m[(i, j)] /= s;
        }
        rhs[i] /= s;
    }
    let mut col_scale = vec![1.0; dim];
    for j in 0..dim {
        let s = m.column(j).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !(s > 0.0) {
            return Err((f64::INFINITY, format!("column {j} is zero")));
        }
        col_scale[j] = s;
        for i in 0..dim {
            m[(i, j)] /= s;
        }
    }
    let lu = m.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..dim).map(|i| u[(i, i)].norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = dmax / dmin;
    if !(condition < MAX_CONDITION) {
        return Err((condition, "near-singular block system".into()));
    }
    let mut x = lu.solve(&rhs).ok_or((condition, "LU solve failed".to_string()))?;
    for j in 0..dim {
        x[j] /= col_scale[j];
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err((condition, "non-finite coefficients".into()));
    }
    Ok((x, condition))
}

impl RadialSolution {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn segment_index(&self, r: f64) -> Result<usize> {
        let first = self.segments[0].r_in;
        if r < first || !r.is_finite() {
            return Err(CloakError::InvalidInput(format!("radius {r} outside the medium")));
        }
        Ok(self.segments.iter().position(|s| r < s.r_out).unwrap_or(self.segments.len() - 1))
    }

    /// `(u(r), P(r) u'(r))`.
    pub fn state(&self, r: f64) -> Result<[C64; 2]> {
        let i = self.segment_index(r)?;
        self.state_in(i, r)
    }

    fn state_in(&self, i: usize, r: f64) -> Result<[C64; 2]> {
        let s = &self.segments[i];
        let c = self.coeffs[i];
        match &s.kind {
            SegmentKind::Constant { .. } => {
                let b = s.basis(self.family, self.order, r)?;
                let d = s.source_shift(self.family, self.order, r)?;
                let a = [c[0] + d[0], c[1] + d[1]];
                Ok([b[0][0] * a[0] + b[1][0] * a[1], b[0][1] * a[0] + b[1][1] * a[1]])
            }
            SegmentKind::Profile { f, .. } => {
                let scale = c[0].norm().max(c[1].norm());
                if scale == 0.0 {
                    return Ok([C64::new(0.0, 0.0); 2]);
                }
                let start = [[c[0] / scale, c[1] / scale], [C64::new(0.0, 0.0); 2]];
                let (_, cols) = integrate_columns(f, s.r_in, r, start, f64::INFINITY)?;
                Ok([cols[0][0] * scale, cols[0][1] * scale])
            }
        }
    }

    pub fn value(&self, r: f64) -> Result<C64> {
        Ok(self.state(r)?[0])
    }

    /// `(u(r), u'(r))`.
    pub fn value_and_derivative(&self, r: f64) -> Result<(C64, C64)> {
        let i = self.segment_index(r)?;
        let st = self.state_in(i, r)?;
        let p = self.segments[i].flux_weight(self.family, r);
        Ok((st[0], st[1] / p))
    }

    /// Flux coefficient `P(r)` divided by the family weight.
    pub fn flux_coefficient(&self, r: f64) -> Result<C64> {
        let i = self.segment_index(r)?;
        Ok(self.segments[i].flux_weight(self.family, r) / self.family.weight(r))
    }

    /// Amplitude of the outgoing exterior basis function at infinity.
    pub fn outgoing_amplitude(&self) -> Result<C64> {
        let last = self.segments.len() - 1;
        let d = self.segments[last].source_shift(self.family, self.order, f64::INFINITY)?;
        Ok(self.coeffs[last][1] + d[1])
    }

    /// Largest jump of `(u, P u')` across segment interfaces, relative to the
    /// largest magnitude of the same component at any interface.
    pub fn interface_residual(&self) -> Result<f64> {
        let mut jump = [0.0f64; 2];
        let mut scale = [1e-300f64; 2];
        for i in 0..self.segments.len() - 1 {
            let r = self.segments[i].r_out;
            let left = self.state_in(i, r)?;
            let right = self.state_in(i + 1, r)?;
            for c in 0..2 {
                scale[c] = scale[c].max(left[c].norm()).max(right[c].norm());
                jump[c] = jump[c].max((left[c] - right[c]).norm());
            }
        }
        Ok((jump[0] / scale[0]).max(jump[1] / scale[1]))
    }

    /// Interface radii including shooting nodes, useful for quadrature splits.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.r_in).collect()
    }

    pub fn angular_eigenvalue(&self) -> f64 {
        angular_eigen(self.family, self.order)
    }
}

/// Constant-layer coefficients for `(P u')' + Q u = H` given flux `c` and
/// wavenumber `k`: returns `(P(r), Q(r))`.
pub fn constant_profile(family: Family, n: usize, c: C64, k: C64, r: f64) -> (C64, C64) {
    let w = family.weight(r);
    let lam = angular_eigen(family, n);
    (c * w, c * w * (k * k - lam / (r * r)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn homogeneous(family: Family, n: usize, k: f64) -> RadialProblem {
        RadialProblem {
            family,
            order: n,
            core: Core::Regular,
            layers: vec![Layer {
                r_in: 0.0,
                r_out: f64::INFINITY,
                coeff: LayerCoeff::Constant { flux: c(1.0), k: c(k) },
            }],
            sources: vec![],
            incident: c(1.0),
        }
    }

    #[test]
    fn homogeneous_has_no_outgoing_part() {
        for fam in [Family::Spherical, Family::Cylindrical, Family::Riccati] {
            let s = solve(&homogeneous(fam, 3, 1.3)).unwrap();
            assert!(s.outgoing_amplitude().unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn wronskian_constants_match_direct_evaluation() {
        let k = C64::new(1.7, 0.2);
        let cf = C64::new(0.8, 0.1);
        for fam in [Family::Spherical, Family::Cylindrical, Family::Riccati] {
            for second in [BasisKind::Second, BasisKind::Outgoing] {
                for n in [0usize, 3] {
                    let r = 0.9;
                    let (v1, d1) = fam.eval(BasisKind::Regular, n, k * r).unwrap();
                    let (v2, d2) = fam.eval(second, n, k * r).unwrap();
                    let p = cf * fam.weight(r);
                    let w = p * k * (v1 * d2 - d1 * v2);
                    let expect = fam.wronskian(second, cf, k);
                    assert!((w - expect).norm() < 1e-12 * expect.norm(), "{fam:?} {second:?} {n}");
                }
            }
        }
    }

    #[test]
    fn profile_layer_matches_constant_layer() {
        // the same medium written as a profile must reproduce the constant-layer solution
        let n = 4;
        let (c1, k1) = (c(2.0), c(1.5));
        let layers_const = vec![
            Layer { r_in: 0.0, r_out: 0.2, coeff: LayerCoeff::Constant { flux: c(1.0), k: c(3.0) } },
            Layer { r_in: 0.2, r_out: 1.5, coeff: LayerCoeff::Constant { flux: c1, k: k1 } },
            Layer { r_in: 1.5, r_out: f64::INFINITY, coeff: LayerCoeff::Constant { flux: c(1.0), k: c(1.0) } },
        ];
        let mut layers_prof = layers_const.clone();
        layers_prof[1].coeff =
            LayerCoeff::Profile(Arc::new(move |r| constant_profile(Family::Spherical, n, c1, k1, r)));
        let base = RadialProblem {
            family: Family::Spherical,
            order: n,
            core: Core::Regular,
            layers: layers_const,
            sources: vec![],
            incident: c(1.0),
        };
        let a = solve(&base).unwrap();
        let b = solve(&RadialProblem { layers: layers_prof, ..base }).unwrap();
        let (ao, bo) = (a.outgoing_amplitude().unwrap(), b.outgoing_amplitude().unwrap());
        assert!((ao - bo).norm() < 1e-12, "{ao} {bo}");
        // normwise comparison over the profile layer
        let pts = [0.3, 0.6, 0.9, 1.2, 1.4];
        let scale = pts.iter().map(|&r| a.value(r).unwrap().norm()).fold(0.0, f64::max);
        for r in pts {
            let (ua, ub) = (a.value(r).unwrap(), b.value(r).unwrap());
            assert!((ua - ub).norm() < 1e-10 * scale, "r={r} {ua} {ub}");
        }
        assert!(b.interface_residual().unwrap() < 1e-10);
    }

    #[test]
    fn dirichlet_sphere_mode_zero() {
        let k = 1.0;
        let r0 = 0.3;
        let p = RadialProblem {
            core: Core::Dirichlet,
            layers: vec![Layer {
                r_in: r0,
                r_out: f64::INFINITY,
                coeff: LayerCoeff::Constant { flux: c(1.0), k: c(k) },
            }],
            ..homogeneous(Family::Spherical, 0, k)
        };
        let s = solve(&p).unwrap();
        let j = sph_bessel(SphKind::J, 0, c(k * r0)).unwrap().value;
        let h = sph_bessel(SphKind::H1, 0, c(k * r0)).unwrap().value;
        assert!((s.outgoing_amplitude().unwrap() + j / h).norm() < 1e-14);
        assert!(s.value(r0).unwrap().norm() < 1e-14);
    }

    #[test]
    fn delta_source_reproduces_green_function() {
        // mode 0 of delta(x - x0) with |x0| = r0: u = -(1/4pi) e^{ik|x-x0|}/|x-x0| averaged
        let k = 1.2;
        let r0 = 2.0;
        let p = RadialProblem {
            sources: vec![RadialSource::Delta { r0, weight: c(1.0 / (4.0 * std::f64::consts::PI)) }],
            incident: c(0.0),
            ..homogeneous(Family::Spherical, 0, k)
        };
        let s = solve(&p).unwrap();
        for r in [0.5, 3.0] {
            let (lo, hi) = if r < r0 { (r, r0) } else { (r0, r) };
            let j = sph_bessel(SphKind::J, 0, c(k * lo)).unwrap().value;
            let h = sph_bessel(SphKind::H1, 0, c(k * hi)).unwrap().value;
            let expect = -C64::i() * k * j * h / (4.0 * std::f64::consts::PI);
            assert!((s.value(r).unwrap() - expect).norm() < 1e-14, "r={r}");
        }
    }

    #[test]
    fn distributed_source_satisfies_ode() {
        let k = 0.9;
        let h: SourceFn = Arc::new(|r: f64| C64::new((r - 2.0) * (3.0 - r), 0.3));
        let p = RadialProblem {
            sources: vec![RadialSource::Distributed { a: 2.0, b: 3.0, h: h.clone() }],
            incident: c(0.0),
            ..homogeneous(Family::Spherical, 2, k)
        };
        let s = solve(&p).unwrap();
        // finite-difference residual of (r^2 u')' + (k^2 r^2 - 6) u = H at interior points
        let d = 1e-4;
        for r in [2.3, 2.7] {
            let flux = |x: f64| s.state(x).unwrap()[1];
            let lhs = (flux(r + d) - flux(r - d)) / (2.0 * d) + (k * k * r * r - 6.0) * s.value(r).unwrap();
            assert!((lhs - h(r)).norm() < 1e-6, "{lhs} {}", h(r));
        }
        // nothing incoming: outside the support the field is purely outgoing / regular
        let r_out = 4.0;
        let hv = sph_bessel(SphKind::H1, 2, c(k * r_out)).unwrap().value;
        let amp = s.outgoing_amplitude().unwrap();
        assert!((s.value(r_out).unwrap() - amp * hv).norm() < 1e-13);
    }

    #[test]
    fn layer_validation() {
        let mut p = homogeneous(Family::Spherical, 0, 1.0);
        p.layers[0].r_in = 0.5;
        assert!(solve(&p).is_err());
        let mut p = homogeneous(Family::Spherical, 0, 1.0);
        p.layers[0].r_out = 5.0;
        assert!(solve(&p).is_err());
    }
}
