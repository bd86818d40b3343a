//! rho-sweeps, rate fits, blow-up probes and cross-solver equivalence checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::CloakConfig;
use crate::error::{CloakError, Result};
use crate::geometry::Point;
use crate::helmholtz::{
    assemble_equivalent_medium, eval_field, expand_source, field_norm, solve_anisotropic_direct, solve_modes,
    visibility_norm, Annulus, ExpandedSource, LayeredMedium, ModeKey, ModeSolution, NormKind, SourceSpec,
};
use crate::maxwell::{
    assemble_equivalent_medium_em, em_field_norm, expand_source_em, radial_discrepancy, solve_multipole,
    solve_multipole_direct, solve_multipoles, sphere_directions, visibility_norm_em, CurrentSpec, EmExpansion,
    EmLayeredMedium, MultipoleSolution, Polarization,
};
use crate::resonance::{
    build_resonant_source, is_resonant, nearest_resonance, project_out, project_out_acoustic, resonant_modes,
    ResonanceFamily, ResonantMode, ResonantSource,
};
use crate::timesynth::{synthesize_timedomain, synthesize_timedomain_em, FrequencyGrid, PulseSpec};
use num_complex::Complex64 as C64;

/// Exterior visibility region.
pub const EXTERIOR: Annulus = Annulus { r_in: 2.0, r_out: 4.0 };
/// Interior region holding the object and the lossy layer.
pub const INTERIOR: Annulus = Annulus { r_in: 0.0, r_out: 1.0 };

pub const ACOUSTIC_RHO_LIST: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];
pub const MAXWELL_RHO_LIST: [f64; 3] = [0.1, 0.05, 0.025];

/// Search window for resonances requested by index.
const RESONANCE_WINDOW: (f64, f64) = (0.05, 60.0);

fn one() -> f64 {
    1.0
}

/// Serializable source description; resolved against a configuration and a
/// frequency before solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceDescriptor {
    /// Acoustic plane wave.
    PlaneWave {
        direction: [f64; 3],
    },
    /// Acoustic point source.
    PointSource {
        x0: [f64; 3],
        #[serde(default = "one")]
        strength: f64,
    },
    /// Acoustic `sin^4` shell of one angular key.
    ModalShell {
        n: usize,
        #[serde(default)]
        m: usize,
        #[serde(default)]
        odd: bool,
        r_in: f64,
        r_out: f64,
        #[serde(default = "one")]
        norm: f64,
    },
    EmPlaneWave {
        #[serde(default)]
        polarization_angle: f64,
    },
    EmDipole {
        radius: f64,
    },
    EmShell {
        n: usize,
        #[serde(default)]
        m: usize,
        #[serde(default)]
        odd: bool,
        pol: Polarization,
        r_in: f64,
        r_out: f64,
        #[serde(default = "one")]
        norm: f64,
    },
    /// Resonant interior mode used as a source on `B_1` (TE for Maxwell).
    ResonantMode {
        n: usize,
        #[serde(default)]
        m: usize,
        #[serde(default)]
        odd: bool,
    },
    /// Interior shell with the resonant mode of the same key removed, so that
    /// it pairs to zero against it. Maxwell shells are TE.
    ProjectedShell {
        n: usize,
        #[serde(default)]
        m: usize,
        #[serde(default)]
        odd: bool,
        r_in: f64,
        r_out: f64,
        #[serde(default = "one")]
        norm: f64,
    },
    Sum {
        parts: Vec<SourceDescriptor>,
    },
}

/// Source parts tagged with whether they lie outside `B_2` (and so also
/// drive the free problem).
#[derive(Debug, Clone)]
pub enum ResolvedSource {
    Acoustic(Vec<(SourceSpec, bool)>),
    Maxwell(Vec<(CurrentSpec, bool)>),
}

/// Resonance family probed by a configuration; Maxwell uses TE modes.
pub fn resonance_family(config: &CloakConfig) -> ResonanceFamily {
    if config.variant.is_maxwell() {
        ResonanceFamily::MaxwellTE
    } else if config.dimension == 2 {
        ResonanceFamily::Acoustic2D
    } else {
        ResonanceFamily::Acoustic3D
    }
}

fn object_params(config: &CloakConfig) -> (f64, f64) {
    (config.object.lambda1, config.object.lambda2)
}

fn resonant_mode_at(config: &CloakConfig, key: ModeKey, omega: f64) -> Result<ResonantMode> {
    let family = resonance_family(config);
    let params = object_params(config);
    if !is_resonant(family, params, key, omega)? {
        let nearest = nearest_resonance(family, params, key.n, omega)?;
        return Err(CloakError::NotResonant { nearest });
    }
    ResonantMode::candidate(family, params, key, omega)
}

impl SourceDescriptor {
    fn is_maxwell(&self) -> Option<bool> {
        match self {
            SourceDescriptor::PlaneWave { .. }
            | SourceDescriptor::PointSource { .. }
            | SourceDescriptor::ModalShell { .. } => Some(false),
            SourceDescriptor::EmPlaneWave { .. }
            | SourceDescriptor::EmDipole { .. }
            | SourceDescriptor::EmShell { .. } => Some(true),
            _ => None,
        }
    }

    /// Largest radius of the support, `None` for plane waves.
    pub fn outer_radius(&self) -> Option<f64> {
        match self {
            SourceDescriptor::PlaneWave { .. } | SourceDescriptor::EmPlaneWave { .. } => None,
            SourceDescriptor::PointSource { x0, .. } => Some(x0.iter().map(|v| v * v).sum::<f64>().sqrt()),
            SourceDescriptor::ModalShell { r_out, .. } | SourceDescriptor::EmShell { r_out, .. } => Some(*r_out),
            SourceDescriptor::EmDipole { radius } => Some(radius + 0.025),
            SourceDescriptor::ResonantMode { .. } | SourceDescriptor::ProjectedShell { .. } => Some(1.0),
            SourceDescriptor::Sum { parts } => {
                let mut r: f64 = 0.0;
                for p in parts {
                    r = r.max(p.outer_radius()?);
                }
                Some(r)
            }
        }
    }

    /// Concrete source parts for `config` at frequency `omega`.
    pub fn resolve(&self, config: &CloakConfig, omega: f64) -> Result<ResolvedSource> {
        let maxwell = config.variant.is_maxwell();
        if let Some(kind) = self.leaf_kinds().into_iter().find(|k| *k != maxwell) {
            let what = if kind { "Maxwell source" } else { "acoustic source" };
            return Err(CloakError::InvalidInput(format!("{what} used with variant {:?}", config.variant)));
        }
        let mut acoustic = Vec::new();
        let mut currents = Vec::new();
        self.collect(config, omega, &mut acoustic, &mut currents)?;
        Ok(if maxwell { ResolvedSource::Maxwell(currents) } else { ResolvedSource::Acoustic(acoustic) })
    }

    fn leaf_kinds(&self) -> Vec<bool> {
        match self {
            SourceDescriptor::Sum { parts } => parts.iter().flat_map(|p| p.leaf_kinds()).collect(),
            other => other.is_maxwell().into_iter().collect(),
        }
    }

    fn collect(
        &self,
        config: &CloakConfig,
        omega: f64,
        acoustic: &mut Vec<(SourceSpec, bool)>,
        currents: &mut Vec<(CurrentSpec, bool)>,
    ) -> Result<()> {
        let exterior = self.outer_radius().is_none_or(|_| self.inner_radius() >= 2.0);
        match self {
            SourceDescriptor::PlaneWave { direction } => {
                acoustic.push((SourceSpec::PlaneWave { direction: *direction }, true));
            }
            SourceDescriptor::PointSource { x0, strength } => {
                acoustic.push((SourceSpec::PointSource { x0: *x0, strength: C64::new(*strength, 0.0) }, exterior));
            }
            SourceDescriptor::ModalShell { n, m, odd, r_in, r_out, norm } => {
                let key = ModeKey { n: *n, m: *m, odd: *odd };
                acoustic.push((SourceSpec::ModalShell { key, r_in: *r_in, r_out: *r_out, norm: *norm }, exterior));
            }
            SourceDescriptor::EmPlaneWave { polarization_angle } => {
                currents.push((CurrentSpec::PlaneWave { polarization_angle: *polarization_angle }, true));
            }
            SourceDescriptor::EmDipole { radius } => {
                currents.push((CurrentSpec::ElectricDipole { radius: *radius }, exterior));
            }
            SourceDescriptor::EmShell { n, m, odd, pol, r_in, r_out, norm } => {
                let key = ModeKey { n: *n, m: *m, odd: *odd };
                let spec = CurrentSpec::MultipoleShell { key, pol: *pol, r_in: *r_in, r_out: *r_out, norm: *norm };
                currents.push((spec, exterior));
            }
            SourceDescriptor::ResonantMode { n, m, odd } => {
                let mode = resonant_mode_at(config, ModeKey { n: *n, m: *m, odd: *odd }, omega)?;
                match build_resonant_source(&mode)? {
                    ResonantSource::Acoustic(s) => acoustic.push((s, false)),
                    ResonantSource::Maxwell(j) => currents.push((j, false)),
                }
            }
            SourceDescriptor::ProjectedShell { n, m, odd, r_in, r_out, norm } => {
                let key = ModeKey { n: *n, m: *m, odd: *odd };
                let mode = resonant_mode_at(config, key, omega)?;
                if config.variant.is_maxwell() {
                    let pol = Polarization::TE;
                    let shell = CurrentSpec::MultipoleShell { key, pol, r_in: *r_in, r_out: *r_out, norm: *norm };
                    currents.push((project_out(&shell, &mode)?, false));
                } else {
                    let shell = SourceSpec::ModalShell { key, r_in: *r_in, r_out: *r_out, norm: *norm };
                    acoustic.push((project_out_acoustic(&shell, &mode)?, false));
                }
            }
            SourceDescriptor::Sum { parts } => {
                for p in parts {
                    p.collect(config, omega, acoustic, currents)?;
                }
            }
        }
        Ok(())
    }

    fn inner_radius(&self) -> f64 {
        match self {
            SourceDescriptor::PlaneWave { .. } | SourceDescriptor::EmPlaneWave { .. } => f64::INFINITY,
            SourceDescriptor::PointSource { x0, .. } => x0.iter().map(|v| v * v).sum::<f64>().sqrt(),
            SourceDescriptor::ModalShell { r_in, .. } | SourceDescriptor::EmShell { r_in, .. } => *r_in,
            SourceDescriptor::EmDipole { radius } => radius - 0.025,
            SourceDescriptor::ResonantMode { .. } | SourceDescriptor::ProjectedShell { .. } => 0.0,
            SourceDescriptor::Sum { parts } => parts.iter().map(|p| p.inner_radius()).fold(f64::INFINITY, f64::min),
        }
    }
}

/// Resonance picked by order and index, or a plain frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Frequency {
    Value(f64),
    Resonance {
        order: usize,
        #[serde(default)]
        index: usize,
    },
}

impl Frequency {
    pub fn resolve(&self, config: &CloakConfig) -> Result<f64> {
        match *self {
            Frequency::Value(w) if w > 0.0 && w.is_finite() => Ok(w),
            Frequency::Value(w) => Err(CloakError::InvalidInput(format!("omega = {w} must be positive"))),
            Frequency::Resonance { order, index } => {
                let family = resonance_family(config);
                let modes = resonant_modes(family, object_params(config), ModeKey::zonal(order), RESONANCE_WINDOW)?;
                modes.get(index).map(|m| m.omega).ok_or_else(|| {
                    CloakError::InvalidInput(format!(
                        "only {} resonances of order {order} below omega = {}",
                        modes.len(),
                        RESONANCE_WINDOW.1
                    ))
                })
            }
        }
    }
}

/// Stable SHA-256 of the JSON serialization.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value).map_err(|e| CloakError::InvalidInput(format!("unserializable: {e}")))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn check_rho_list(list: &[f64]) -> Result<()> {
    if list.is_empty() {
        return Err(CloakError::InvalidInput("empty rho list".into()));
    }
    if let Some(r) = list.iter().find(|r| !(**r > 0.0 && **r < 0.5)) {
        return Err(CloakError::InvalidInput(format!("rho = {r} not in (0, 1/2)")));
    }
    if list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CloakError::InvalidInput("rho list must be strictly decreasing".into()));
    }
    Ok(())
}

fn default_rho_list(config: &CloakConfig) -> Vec<f64> {
    if config.variant.is_maxwell() {
        MAXWELL_RHO_LIST.to_vec()
    } else {
        ACOUSTIC_RHO_LIST.to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Template; `rho` is replaced by each sweep entry.
    pub config: CloakConfig,
    pub omega: Frequency,
    #[serde(default)]
    pub rho_list: Option<Vec<f64>>,
    pub source: SourceDescriptor,
    pub n_max: usize,
}

impl SweepSpec {
    pub fn rho_list(&self) -> Vec<f64> {
        self.rho_list.clone().unwrap_or_else(|| default_rho_list(&self.config))
    }
}

/// Norms of one sweep entry. Exterior norms are of `u_c - u` on `B_4 \ B_2`
/// (H1 is H(curl) for Maxwell); interior norms are of the cloaked field on `B_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub rho: f64,
    pub exterior_l2: f64,
    pub exterior_h1: f64,
    pub interior_l2: f64,
    pub interior_h1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config_hash: String,
    pub omega: f64,
    pub reports: Vec<VisibilityReport>,
    pub warnings: Vec<String>,
}

fn expand_acoustic(parts: &[&SourceSpec], omega: f64, dim: usize, n_max: usize) -> Result<ExpandedSource> {
    let mut out = ExpandedSource { modes: Vec::new(), tail_estimate: 0.0, warning: None };
    for p in parts {
        let e = expand_source(p, omega, dim, n_max, EXTERIOR.r_out)?;
        out.modes.extend(e.modes);
        out.tail_estimate += e.tail_estimate;
        out.warning = out.warning.or(e.warning);
    }
    Ok(out)
}

fn expand_maxwell(parts: &[&CurrentSpec], omega: f64, n_max: usize) -> Result<EmExpansion> {
    let mut out = EmExpansion { modes: Vec::new(), tail_estimate: 0.0, warning: None };
    for p in parts {
        let e = expand_source_em(p, omega, n_max, EXTERIOR.r_out)?;
        out.modes.extend(e.modes);
        out.tail_estimate += e.tail_estimate;
        out.warning = out.warning.or(e.warning);
    }
    Ok(out)
}

fn annotate<T>(rho: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| CloakError::Sweep { rho, source: Box::new(e) })
}

/// One report per entry of the rho list, in list order.
pub fn run_rho_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.config.validate()?;
    let rhos = spec.rho_list();
    check_rho_list(&rhos)?;
    let omega = spec.omega.resolve(&spec.config)?;
    let source = spec.source.resolve(&spec.config, omega)?;
    let mut warnings = Vec::new();
    let reports: Vec<VisibilityReport> = match &source {
        ResolvedSource::Acoustic(parts) => {
            let dim = spec.config.dimension;
            let all: Vec<&SourceSpec> = parts.iter().map(|p| &p.0).collect();
            let ext: Vec<&SourceSpec> = parts.iter().filter(|p| p.1).map(|p| &p.0).collect();
            let e = expand_acoustic(&all, omega, dim, spec.n_max)?;
            warnings.extend(e.warning.clone());
            let free = solve_modes(
                &LayeredMedium::homogeneous(dim, omega),
                omega,
                &expand_acoustic(&ext, omega, dim, spec.n_max)?,
            )?;
            rhos.par_iter()
                .map(|&rho| {
                    annotate(
                        rho,
                        (|| {
                            let c = spec.config.with_rho(rho)?;
                            let sols = solve_modes(&assemble_equivalent_medium(&c, omega)?, omega, &e)?;
                            acoustic_report(rho, &sols, &free)
                        })(),
                    )
                })
                .collect::<Result<_>>()?
        }
        ResolvedSource::Maxwell(parts) => {
            let all: Vec<&CurrentSpec> = parts.iter().map(|p| &p.0).collect();
            let ext: Vec<&CurrentSpec> = parts.iter().filter(|p| p.1).map(|p| &p.0).collect();
            let e = expand_maxwell(&all, omega, spec.n_max)?;
            warnings.extend(e.warning.clone());
            let free = solve_multipoles(&EmLayeredMedium::vacuum(), omega, &expand_maxwell(&ext, omega, spec.n_max)?)?;
            rhos.par_iter()
                .map(|&rho| {
                    annotate(
                        rho,
                        (|| {
                            let c = spec.config.with_rho(rho)?;
                            let sols = solve_multipoles(&assemble_equivalent_medium_em(&c, omega)?, omega, &e)?;
                            maxwell_report(rho, &sols, &free)
                        })(),
                    )
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(SweepResult { config_hash: config_hash(spec)?, omega, reports, warnings })
}

fn acoustic_report(rho: f64, sols: &[ModeSolution], free: &[ModeSolution]) -> Result<VisibilityReport> {
    Ok(VisibilityReport {
        rho,
        exterior_l2: visibility_norm(sols, free, EXTERIOR, NormKind::L2)?,
        exterior_h1: visibility_norm(sols, free, EXTERIOR, NormKind::H1)?,
        interior_l2: field_norm(sols, INTERIOR, NormKind::L2)?,
        interior_h1: field_norm(sols, INTERIOR, NormKind::H1)?,
    })
}

fn maxwell_report(rho: f64, sols: &[MultipoleSolution], free: &[MultipoleSolution]) -> Result<VisibilityReport> {
    Ok(VisibilityReport {
        rho,
        exterior_l2: visibility_norm_em(sols, free, EXTERIOR, NormKind::L2)?,
        exterior_h1: visibility_norm_em(sols, free, EXTERIOR, NormKind::H1)?,
        interior_l2: em_field_norm(sols, INTERIOR, NormKind::L2)?,
        interior_h1: em_field_norm(sols, INTERIOR, NormKind::H1)?,
    })
}

// ---------------------------------------------------------------------------
// rate fitting

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `norm ~ C rho^p`.
    PowerLaw,
    /// `norm ~ C |ln rho|^(-p)`.
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub model: RateModel,
    pub points: usize,
    /// rho values dropped because their norm was not positive.
    pub excluded: Vec<f64>,
    pub note: Option<String>,
}

/// Least-squares fit of `log norm` against `log rho` or `log(1/|ln rho|)`
/// from `(rho, norm)` pairs.
pub fn fit_rate(points: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    let mut excluded = Vec::new();
    let mut xy = Vec::new();
    for &(rho, v) in points {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(CloakError::InvalidInput(format!("rho = {rho} outside (0, 1)")));
        }
        if !(v > 0.0 && v.is_finite()) {
            excluded.push(rho);
            continue;
        }
        let x = match model {
            RateModel::PowerLaw => rho.ln(),
            RateModel::Logarithmic => -rho.ln().abs().ln(),
        };
        xy.push((x, v.ln()));
    }
    if xy.len() < 3 {
        return Err(CloakError::InvalidInput(format!("rate fit needs 3 positive norms, got {}", xy.len())));
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CloakError::InvalidInput("rate fit needs distinct rho values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    let note = (!excluded.is_empty()).then(|| format!("{} zero norms excluded", excluded.len()));
    Ok(RateFit { exponent: slope, intercept, r_squared, model, points: xy.len(), excluded, note })
}

/// Ratio of the largest to the smallest `norm |ln rho|`.
pub fn log_product_spread(points: &[(f64, f64)]) -> f64 {
    let prods: Vec<f64> = points.iter().map(|(r, v)| v * r.ln().abs()).collect();
    let hi = prods.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = prods.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

pub fn column(reports: &[VisibilityReport], pick: impl Fn(&VisibilityReport) -> f64) -> Vec<(f64, f64)> {
    reports.iter().map(|r| (r.rho, pick(r))).collect()
}

// ---------------------------------------------------------------------------
// resonance probes

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub sweep: SweepResult,
    /// `rho ||u_c||_{H1(B_1)}` (acoustic) or `rho ||(E_c, H_c)||_{L2(B_1)}` (Maxwell).
    pub scaled_interior: Vec<f64>,
    /// No entry of `scaled_interior` falls below half the first.
    pub bounded_below: bool,
    /// Interior norm (H1 acoustic, L2 Maxwell) strictly increasing along the sweep.
    pub interior_growing: bool,
    /// No exterior L2 norm falls below half the first.
    pub exterior_non_decaying: bool,
}

/// Sweep of a resonant configuration. The frequency must be a resonance of
/// every resonant-mode part of the source.
pub fn blowup_probe(spec: &SweepSpec) -> Result<BlowupReport> {
    let omega = spec.omega.resolve(&spec.config)?;
    let keys = resonant_keys(&spec.source);
    if keys.is_empty() {
        return Err(CloakError::InvalidInput("blow-up probe needs a resonant_mode source".into()));
    }
    let family = resonance_family(&spec.config);
    for key in keys {
        if !is_resonant(family, object_params(&spec.config), key, omega)? {
            let nearest = nearest_resonance(family, object_params(&spec.config), key.n, omega)?;
            return Err(CloakError::NotResonant { nearest });
        }
    }
    let sweep = run_rho_sweep(spec)?;
    let maxwell = spec.config.variant.is_maxwell();
    let interior: Vec<f64> =
        sweep.reports.iter().map(|r| if maxwell { r.interior_l2 } else { r.interior_h1 }).collect();
    let scaled: Vec<f64> = sweep.reports.iter().zip(&interior).map(|(r, v)| r.rho * v).collect();
    let bounded_below = scaled.iter().all(|v| *v >= 0.5 * scaled[0]);
    let interior_growing = interior.windows(2).all(|w| w[1] > w[0]);
    let ext: Vec<f64> = sweep.reports.iter().map(|r| r.exterior_l2).collect();
    let exterior_non_decaying = ext.iter().all(|v| *v >= 0.5 * ext[0]);
    Ok(BlowupReport { sweep, scaled_interior: scaled, bounded_below, interior_growing, exterior_non_decaying })
}

fn resonant_keys(source: &SourceDescriptor) -> Vec<ModeKey> {
    match source {
        SourceDescriptor::ResonantMode { n, m, odd } => vec![ModeKey { n: *n, m: *m, odd: *odd }],
        SourceDescriptor::Sum { parts } => parts.iter().flat_map(resonant_keys).collect(),
        _ => vec![],
    }
}

// ---------------------------------------------------------------------------
// cross-solver equivalence

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    /// Largest discrepancy relative to the largest field magnitude.
    pub max_relative: f64,
    pub samples: usize,
}

const EXTERIOR_SAMPLE_RADII: [f64; 7] = [1.1, 1.3, 1.6, 1.9, 2.5, 3.1, 3.7];
const INTERIOR_SAMPLE_RADII: [f64; 5] = [0.07, 0.2, 0.4, 0.6, 0.9];

fn sample_points(dim: usize) -> Vec<Point> {
    let dirs: Vec<Point> = if dim == 3 {
        sphere_directions(24)
    } else {
        (0..24)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.25) / 24.0;
                [t.cos(), t.sin(), 0.0]
            })
            .collect()
    };
    let mut out = Vec::new();
    for r in EXTERIOR_SAMPLE_RADII.iter().chain(&INTERIOR_SAMPLE_RADII) {
        for d in &dirs {
            out.push([r * d[0], r * d[1], r * d[2]]);
        }
    }
    out
}

/// Largest pointwise difference between two acoustic solution sets relative
/// to the largest magnitude of the second.
pub fn acoustic_discrepancy(a: &[ModeSolution], b: &[ModeSolution], points: &[Point]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for x in points {
        let (ua, ub) = (eval_field(a, x)?, eval_field(b, x)?);
        worst = worst.max((ua - ub).norm());
        scale = scale.max(ub.norm());
    }
    Ok(if scale == 0.0 { worst } else { worst / scale })
}

/// Equivalent-inclusion solve pulled back through the blow-up map against
/// the direct solve in the anisotropic physical medium, for a plane wave
/// truncated at order `n_max`.
pub fn equivalence_check(config: &CloakConfig, omega: f64, n_max: usize) -> Result<EquivalenceReport> {
    config.validate()?;
    if config.variant.is_maxwell() {
        let e = expand_source_em(&CurrentSpec::PlaneWave { polarization_angle: 0.0 }, omega, n_max, EXTERIOR.r_out)?;
        let eq = assemble_equivalent_medium_em(config, omega)?;
        let per_mode: Vec<f64> = e
            .modes
            .par_iter()
            .map(|m| -> Result<f64> {
                let a = solve_multipole(&eq, omega, m)?;
                let b = solve_multipole_direct(config, omega, m)?;
                Ok(radial_discrepancy(&a, &b, 1.0, EXTERIOR.r_out)?.max(radial_discrepancy(&a, &b, 0.05, 0.95)?))
            })
            .collect::<Result<_>>()?;
        let worst = per_mode.iter().copied().fold(0.0, f64::max);
        return Ok(EquivalenceReport { max_relative: worst, samples: 2 * 65 * per_mode.len() });
    }
    let d = config.dimension;
    let dir = if d == 3 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
    let e = expand_source(&SourceSpec::PlaneWave { direction: dir }, omega, d, n_max, EXTERIOR.r_out)?;
    let eq = solve_modes(&assemble_equivalent_medium(config, omega)?, omega, &e)?;
    let direct: Vec<ModeSolution> =
        e.modes.par_iter().map(|m| solve_anisotropic_direct(config, omega, m)).collect::<Result<_>>()?;
    let points = sample_points(d);
    Ok(EquivalenceReport { max_relative: acoustic_discrepancy(&eq, &direct, &points)?, samples: points.len() })
}

// ---------------------------------------------------------------------------
// time domain

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSweepSpec {
    pub config: CloakConfig,
    pub pulse: PulseSpec,
    pub frequencies: usize,
    #[serde(default)]
    pub rho_list: Option<Vec<f64>>,
    pub source: SourceDescriptor,
    pub n_max: usize,
    /// Time window; defaults to the free-propagation window, which lossy
    /// cloaks at small rho outring by a relative 1e-4 or so.
    #[serde(default)]
    pub window: Option<f64>,
}

/// Grid for a pulse observed over `B_4`, either with an explicit window or
/// the free-propagation one.
pub fn time_grid(pulse: &PulseSpec, window: Option<f64>, r_source: f64, n: usize) -> Result<FrequencyGrid> {
    match window {
        Some(t) => FrequencyGrid::with_window(pulse, t, n),
        None => FrequencyGrid::for_pulse(pulse, EXTERIOR.r_out, r_source, n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeReport {
    pub rho: f64,
    /// `sup_t ||u_c(t) - u(t)||` over `B_4 \ B_2` (L2 acoustic, H(curl) Maxwell).
    pub sup_visibility: f64,
    pub active_frequencies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSweepResult {
    pub config_hash: String,
    pub reports: Vec<TimeReport>,
}

pub fn run_time_sweep(spec: &TimeSweepSpec) -> Result<TimeSweepResult> {
    spec.config.validate()?;
    let rhos = spec.rho_list.clone().unwrap_or_else(|| default_rho_list(&spec.config));
    check_rho_list(&rhos)?;
    let r_source = spec
        .source
        .outer_radius()
        .ok_or_else(|| CloakError::InvalidInput("time-domain sources must have bounded support".into()))?;
    let grid = time_grid(&spec.pulse, spec.window, r_source, spec.frequencies)?;
    let source = spec.source.resolve(&spec.config, 1.0)?;
    let mut reports = Vec::new();
    for &rho in &rhos {
        let c = annotate(rho, spec.config.with_rho(rho))?;
        let r = match &source {
            ResolvedSource::Acoustic(parts) => {
                let [(s, true)] = parts.as_slice() else {
                    return Err(CloakError::InvalidInput("time-domain source must be one exterior part".into()));
                };
                synthesize_timedomain(&c, s, spec.n_max, &spec.pulse, &grid, EXTERIOR, &[])
            }
            ResolvedSource::Maxwell(parts) => {
                let [(j, true)] = parts.as_slice() else {
                    return Err(CloakError::InvalidInput("time-domain source must be one exterior part".into()));
                };
                synthesize_timedomain_em(&c, j, spec.n_max, &spec.pulse, &grid, EXTERIOR)
            }
        };
        let r = annotate(rho, r)?;
        reports.push(TimeReport { rho, sup_visibility: r.sup_visibility, active_frequencies: r.active_frequencies });
    }
    Ok(TimeSweepResult { config_hash: config_hash(spec)?, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ObjectParams, Variant};

    fn cfg(d: usize, variant: Variant, l1: f64, l2: f64) -> CloakConfig {
        CloakConfig::new(d, 0.1, variant, ObjectParams { lambda1: l1, lambda2: l2 }).unwrap()
    }

    #[test]
    fn power_law_fit_is_exact() {
        let pts: Vec<(f64, f64)> = ACOUSTIC_RHO_LIST.iter().map(|r| (*r, r.powi(3))).collect();
        let f = fit_rate(&pts, RateModel::PowerLaw).unwrap();
        assert!((f.exponent - 3.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_fit_is_exact() {
        let pts: Vec<(f64, f64)> = ACOUSTIC_RHO_LIST.iter().map(|r| (*r, 5.0 / r.ln().abs())).collect();
        let f = fit_rate(&pts, RateModel::Logarithmic).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-12);
        assert!((f.intercept - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_excludes_zero_norms_and_needs_three_points() {
        let mut pts: Vec<(f64, f64)> = ACOUSTIC_RHO_LIST.iter().map(|r| (*r, *r)).collect();
        pts[1].1 = 0.0;
        let f = fit_rate(&pts, RateModel::PowerLaw).unwrap();
        assert_eq!(f.excluded, vec![0.05]);
        assert!(f.note.is_some());
        pts[2].1 = 0.0;
        assert!(fit_rate(&pts, RateModel::PowerLaw).is_err());
    }

    fn shell_spec(rho_list: Vec<f64>) -> SweepSpec {
        SweepSpec {
            config: cfg(3, Variant::FixedLossy, 2.0, 3.0),
            omega: Frequency::Value(1.0),
            rho_list: Some(rho_list),
            source: SourceDescriptor::ModalShell { n: 1, m: 0, odd: false, r_in: 2.5, r_out: 3.5, norm: 1.0 },
            n_max: 4,
        }
    }

    #[test]
    fn single_entry_sweep() {
        let r = run_rho_sweep(&shell_spec(vec![0.2])).unwrap();
        assert_eq!(r.reports.len(), 1);
        assert_eq!(r.reports[0].rho, 0.2);
        assert_eq!(r.config_hash.len(), 64);
    }

    #[test]
    fn rho_list_must_decrease() {
        assert!(run_rho_sweep(&shell_spec(vec![0.05, 0.1])).is_err());
        assert!(run_rho_sweep(&shell_spec(vec![0.6])).is_err());
    }

    #[test]
    fn fixed_lossy_visibility_decreases() {
        let r = run_rho_sweep(&shell_spec(vec![0.2, 0.1, 0.05])).unwrap();
        for w in r.reports.windows(2) {
            assert!(w[1].exterior_h1 < w[0].exterior_h1);
            assert!(w[1].exterior_l2 < w[0].exterior_l2);
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let spec = shell_spec(vec![0.2, 0.1]);
        assert_eq!(run_rho_sweep(&spec).unwrap(), run_rho_sweep(&spec).unwrap());
    }

    #[test]
    fn truncation_increase_leaves_reports_unchanged() {
        let mut spec = shell_spec(vec![0.2]);
        spec.source = SourceDescriptor::PlaneWave { direction: [0.0, 0.0, 1.0] };
        spec.n_max = 14;
        let a = run_rho_sweep(&spec).unwrap().reports[0];
        spec.n_max = 22;
        let b = run_rho_sweep(&spec).unwrap().reports[0];
        for (x, y) in [(a.exterior_l2, b.exterior_l2), (a.exterior_h1, b.exterior_h1), (a.interior_h1, b.interior_h1)] {
            assert!((x - y).abs() <= 1e-7 * y, "{x} vs {y}");
        }
    }

    #[test]
    fn probe_rejects_non_resonant_frequency() {
        let first = 4.493409457909064;
        let spec = SweepSpec {
            config: cfg(3, Variant::NoLoss, 1.0, 1.0),
            omega: Frequency::Value(0.5 * (first + 7.725251836937707)),
            rho_list: None,
            source: SourceDescriptor::ResonantMode { n: 0, m: 0, odd: false },
            n_max: 0,
        };
        match blowup_probe(&spec) {
            Err(CloakError::NotResonant { nearest: Some(w) }) => assert!(w > 4.0 && w < 8.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resonance_by_index() {
        let c = cfg(3, Variant::NoLoss, 1.0, 1.0);
        let w = Frequency::Resonance { order: 0, index: 0 }.resolve(&c).unwrap();
        assert!((w - 4.493409457909064).abs() < 1e-10);
    }

    #[test]
    fn homogeneous_solutions_agree() {
        let e = expand_source(&SourceSpec::PlaneWave { direction: [0.0, 0.0, 1.0] }, 1.3, 3, 10, 4.0).unwrap();
        let a = solve_modes(&LayeredMedium::homogeneous(3, 1.3), 1.3, &e).unwrap();
        let b = solve_modes(&LayeredMedium::homogeneous(3, 1.3), 1.3, &e).unwrap();
        assert!(acoustic_discrepancy(&a, &b, &sample_points(3)).unwrap() <= 1e-12);
    }

    #[test]
    fn equivalence_fixed_lossy() {
        let c = CloakConfig::new(3, 0.2, Variant::FixedLossy, ObjectParams { lambda1: 2.0, lambda2: 3.0 }).unwrap();
        let r = equivalence_check(&c, 1.0, 8).unwrap();
        assert!(r.max_relative <= 1e-8, "{r:?}");
    }

    #[test]
    fn mixed_physics_rejected() {
        let c = cfg(3, Variant::FixedLossy, 1.0, 1.0);
        let s = SourceDescriptor::EmDipole { radius: 3.0 };
        assert!(s.resolve(&c, 1.0).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        let s = SourceDescriptor::Sum {
            parts: vec![
                SourceDescriptor::ProjectedShell { n: 2, m: 0, odd: false, r_in: 0.2, r_out: 0.6, norm: 1.0 },
                SourceDescriptor::EmShell {
                    n: 1,
                    m: 0,
                    odd: false,
                    pol: Polarization::TE,
                    r_in: 0.2,
                    r_out: 0.6,
                    norm: 1.0,
                },
            ],
        };
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<SourceDescriptor>(&text).unwrap(), s);
        assert!(serde_json::from_str::<SourceDescriptor>(r#"{"kind":"em_dipole","radius":3,"extra":1}"#).is_err());
    }
}
