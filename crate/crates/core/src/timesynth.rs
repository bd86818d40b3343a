//! Time-domain fields from frequency sweeps.
//!
//! A source `chi(t) g(x)` is transformed with `hat(chi)(omega) = int chi(t)
//! e^{i omega t} dt`; each frequency is solved with the outgoing solvers and
//! the series is inverted on the half-shifted grid `omega_k = (k + 1/2) d_omega`.
//! With `e^{-i omega t}` time dependence the wave equation
//! `sigma u_tt - div(a grad u) = chi g` maps to `div(a grad u) + omega^2 sigma u = -hat(chi) g`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::config::CloakConfig;
use crate::error::{CloakError, Result};
use crate::geometry::Point;
use crate::helmholtz::{
    assemble_equivalent_medium, eval_field, expand_source, solve_modes, Annulus, LayeredMedium, ModeKey, ModeSolution,
    SourceSpec,
};
use crate::maxwell::{
    assemble_equivalent_medium_em, channel_weights, expand_source_em, field_channels, solve_multipoles, CurrentSpec,
    EmLayeredMedium, MultipoleSolution,
};
use crate::specfun::composite_gauss;

pub use crate::helmholtz::drude_lorentz_coeff;

/// Half-width of the truncated Gaussian in units of `sigma_t`.
const TRUNCATION: f64 = 8.0;
/// Frequencies whose spectrum falls below this fraction of the peak are not solved.
const ACTIVE_FRACTION: f64 = 1e-13;

/// `chi(t) = amplitude exp(-(t - t_c)^2 / (2 sigma_t^2)) sin(omega0 (t - t_c))`
/// on `[0, 2 * 8 sigma_t]`, `t_c = 8 sigma_t`, and zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub omega0: f64,
    pub sigma_t: f64,
    #[serde(default = "unit_amplitude")]
    pub amplitude: f64,
    /// Extra delay added to the whole pulse.
    #[serde(default)]
    pub delay: f64,
}

fn unit_amplitude() -> f64 {
    1.0
}

impl PulseSpec {
    pub fn new(omega0: f64, sigma_t: f64) -> Self {
        Self { omega0, sigma_t, amplitude: 1.0, delay: 0.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_t > 0.0 && self.omega0 >= 0.0 && self.delay >= 0.0 && self.amplitude.is_finite()) {
            return Err(CloakError::InvalidInput(format!("bad pulse {self:?}")));
        }
        Ok(())
    }

    fn center(&self) -> f64 {
        self.delay + TRUNCATION * self.sigma_t
    }

    /// End of the support.
    pub fn t0(&self) -> f64 {
        self.delay + 2.0 * TRUNCATION * self.sigma_t
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = t - self.center();
        if s.abs() > TRUNCATION * self.sigma_t {
            return 0.0;
        }
        self.amplitude * (-s * s / (2.0 * self.sigma_t * self.sigma_t)).exp() * (self.omega0 * s).sin()
    }

    /// Frequency beyond which the spectrum is below `1e-8` of its peak.
    pub fn omega_max(&self) -> f64 {
        self.omega0 + 6.1 / self.sigma_t
    }

    /// Frequency beyond which the spectrum is negligible in double precision.
    fn omega_cut(&self) -> f64 {
        self.omega0 + 12.0 / self.sigma_t
    }
}

/// `omega_k = (k + 1/2) d_omega`, `k < n`, with `d_omega = 2 pi / t_window`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub n: usize,
    pub d_omega: f64,
    pub t_window: f64,
}

impl FrequencyGrid {
    /// Window `T0 + 2 (r_probe + r_source) + 4 sigma_t`.
    pub fn for_pulse(pulse: &PulseSpec, r_probe: f64, r_source: f64, n: usize) -> Result<Self> {
        pulse.validate()?;
        let t_window = pulse.t0() + 2.0 * (r_probe + r_source) + 4.0 * pulse.sigma_t;
        Self::with_window(pulse, t_window, n)
    }

    /// Explicit window, for responses that ring longer than free propagation.
    pub fn with_window(pulse: &PulseSpec, t_window: f64, n: usize) -> Result<Self> {
        pulse.validate()?;
        if !(t_window > 0.0 && t_window.is_finite()) {
            return Err(CloakError::InvalidInput(format!("time window {t_window} must be positive")));
        }
        let g = Self { n, d_omega: 2.0 * PI / t_window, t_window };
        g.check(pulse)?;
        Ok(g)
    }

    fn check(&self, pulse: &PulseSpec) -> Result<()> {
        if self.n == 0 {
            return Err(CloakError::InvalidInput("empty frequency grid".into()));
        }
        if self.d_omega > PI / pulse.t0() * (1.0 + 1e-12) {
            return Err(CloakError::InvalidInput(format!(
                "grid spacing {} does not resolve a pulse of length {}",
                self.d_omega,
                pulse.t0()
            )));
        }
        if self.omega(self.n - 1) < pulse.omega_max() {
            return Err(CloakError::InvalidInput(format!(
                "grid top {} below the pulse band edge {}",
                self.omega(self.n - 1),
                pulse.omega_max()
            )));
        }
        Ok(())
    }

    pub fn omega(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.d_omega
    }

    /// Number of time samples, `2 n`.
    pub fn samples(&self) -> usize {
        2 * self.n
    }

    pub fn times(&self) -> Vec<f64> {
        let m = self.samples();
        (0..m).map(|j| j as f64 * self.t_window / m as f64).collect()
    }
}

fn time_nodes(pulse: &PulseSpec) -> Vec<(f64, f64)> {
    let (a, b) = (pulse.delay, pulse.t0());
    let panels = ((b - a) * (pulse.omega_cut() + pulse.omega0 + 1.0) / 4.0).ceil().max(8.0) as usize;
    composite_gauss(a, b, panels, 20)
}

/// `hat(chi)(omega_k)` by Gauss quadrature over the support.
pub fn pulse_spectrum(pulse: &PulseSpec, grid: &FrequencyGrid) -> Result<Vec<C64>> {
    pulse.validate()?;
    grid.check(pulse)?;
    let nodes: Vec<(f64, f64)> = time_nodes(pulse).into_iter().map(|(t, w)| (t, w * pulse.eval(t))).collect();
    Ok((0..grid.n)
        .into_par_iter()
        .map(|k| {
            let w = grid.omega(k);
            if w > pulse.omega_cut() {
                return C64::new(0.0, 0.0);
            }
            nodes.iter().map(|&(t, f)| C64::from_polar(f, w * t)).sum()
        })
        .collect())
}

/// `int |chi|^2 dt` and `(d_omega / pi) sum |hat(chi)|^2`.
pub fn plancherel_sums(pulse: &PulseSpec, grid: &FrequencyGrid) -> Result<(f64, f64)> {
    let spec = pulse_spectrum(pulse, grid)?;
    let time: f64 = time_nodes(pulse).into_iter().map(|(t, w)| w * pulse.eval(t).powi(2)).sum();
    let freq = grid.d_omega / PI * spec.iter().map(|c| c.norm_sqr()).sum::<f64>();
    Ok((time, freq))
}

/// `u(t_j) = (d_omega / pi) Re sum_k c_k e^{-i omega_k t_j}` on `grid.times()`.
pub fn inverse_transform(grid: &FrequencyGrid, coeffs: &[C64]) -> Vec<f64> {
    let m = grid.samples();
    let mut buf = vec![C64::new(0.0, 0.0); m];
    buf[..coeffs.len().min(grid.n)].copy_from_slice(&coeffs[..coeffs.len().min(grid.n)]);
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    buf.iter()
        .enumerate()
        .map(|(j, c)| grid.d_omega / PI * (c * C64::from_polar(1.0, -PI * j as f64 / m as f64)).re)
        .collect()
}

/// Region quadrature used for sup-in-time norms.
fn region_nodes(region: Annulus, omega_top: f64) -> Vec<(f64, f64)> {
    let panels = ((region.r_out - region.r_in) * (omega_top + 1.0) / 3.0).ceil().max(4.0) as usize;
    composite_gauss(region.r_in, region.r_out, panels, 20)
}

#[derive(Debug, Clone)]
pub struct TimeDomainResult {
    pub times: Vec<f64>,
    /// Per probe point: cloaked and free series.
    pub probes_cloaked: Vec<Vec<f64>>,
    pub probes_free: Vec<Vec<f64>>,
    /// `||u_c(t) - u(t)||` over the region at every time sample.
    pub visibility: Vec<f64>,
    /// Energy of the cloaked field over the region at every time sample.
    pub energy: Vec<f64>,
    pub sup_visibility: f64,
    pub active_frequencies: usize,
}

/// Per-frequency values: region channels of the difference, region channels
/// of the cloaked field, and probe values (cloaked, free).
struct FrequencyData {
    diff: Vec<C64>,
    cloaked: Vec<C64>,
    probes: Vec<(C64, C64)>,
}

/// Shared driver: `solve(omega)` returns per-frequency data with a fixed
/// layout; columns are synthesized independently.
fn synthesize(
    pulse: &PulseSpec,
    grid: &FrequencyGrid,
    weights: &[f64],
    n_probes: usize,
    solve: impl Fn(f64) -> Result<FrequencyData> + Sync,
) -> Result<TimeDomainResult> {
    let spectrum = pulse_spectrum(pulse, grid)?;
    let peak = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let active: Vec<usize> = (0..grid.n).filter(|&k| spectrum[k].norm() > ACTIVE_FRACTION * peak).collect();
    let data: Vec<FrequencyData> = active
        .par_iter()
        .map(|&k| {
            let w = grid.omega(k);
            solve(w).map_err(|e| CloakError::Frequency { omega: w, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let column = |pick: &dyn Fn(&FrequencyData) -> C64| -> Vec<f64> {
        let mut c = vec![C64::new(0.0, 0.0); grid.n];
        for (i, &k) in active.iter().enumerate() {
            // the response to chi g is -hat(chi) times the unit-source solution
            c[k] = -spectrum[k] * pick(&data[i]);
        }
        inverse_transform(grid, &c)
    };
    let m = grid.samples();
    let accumulate = |len: usize, pick: &(dyn Fn(&FrequencyData, usize) -> C64 + Sync)| -> Vec<f64> {
        let cols: Vec<Vec<f64>> = (0..len)
            .into_par_iter()
            .map(|i| {
                let s = column(&|d: &FrequencyData| pick(d, i));
                s.into_iter().map(|v| weights[i] * v * v).collect()
            })
            .collect();
        let mut total = vec![0.0; m];
        for c in cols {
            for (t, v) in total.iter_mut().zip(c) {
                *t += v;
            }
        }
        total
    };
    let visibility: Vec<f64> = accumulate(weights.len(), &|d, i| d.diff[i]).into_iter().map(f64::sqrt).collect();
    let energy = accumulate(weights.len(), &|d, i| d.cloaked[i]);
    let probes_cloaked = (0..n_probes).map(|p| column(&|d: &FrequencyData| d.probes[p].0)).collect();
    let probes_free = (0..n_probes).map(|p| column(&|d: &FrequencyData| d.probes[p].1)).collect();
    Ok(TimeDomainResult {
        times: grid.times(),
        probes_cloaked,
        probes_free,
        sup_visibility: visibility.iter().copied().fold(0.0, f64::max),
        visibility,
        energy,
        active_frequencies: active.len(),
    })
}

/// Acoustic sweep with an arbitrary cloaked medium per frequency.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_acoustic_media(
    dimension: usize,
    cloaked: impl Fn(f64) -> Result<LayeredMedium> + Sync,
    source: &SourceSpec,
    n_max: usize,
    pulse: &PulseSpec,
    grid: &FrequencyGrid,
    region: Annulus,
    probes: &[Point],
) -> Result<TimeDomainResult> {
    let nodes = region_nodes(region, pulse.omega_cut());
    // one column per (key, node); keys from a reference expansion
    let reference = expand_source(source, 1.0, dimension, n_max, region.r_out)?;
    let keys: Vec<ModeKey> = {
        let mut k: Vec<ModeKey> = reference.modes.iter().flat_map(|m| m.keys.iter().map(|x| x.0)).collect();
        k.sort();
        k.dedup();
        k
    };
    let weights: Vec<f64> = keys
        .iter()
        .flat_map(|key| nodes.iter().map(move |&(r, w)| w * r.powi(dimension as i32 - 1) * key.norm_sq(dimension)))
        .collect();
    let per_key = |sols: &[ModeSolution]| -> Result<Vec<C64>> {
        let mut map: BTreeMap<ModeKey, Vec<C64>> =
            keys.iter().map(|k| (*k, vec![C64::new(0.0, 0.0); nodes.len()])).collect();
        for s in sols {
            let vals: Vec<C64> =
                nodes.iter().map(|&(r, _)| s.radial_physical(r).map(|v| v.0)).collect::<Result<_>>()?;
            for (k, f) in &s.keys {
                let slot = map
                    .get_mut(k)
                    .ok_or_else(|| CloakError::Numerical(format!("key {k:?} changed across frequencies")))?;
                for (o, v) in slot.iter_mut().zip(&vals) {
                    *o += f * v;
                }
            }
        }
        Ok(map.into_values().flatten().collect())
    };
    synthesize(pulse, grid, &weights, probes.len(), |w| {
        let e = expand_source(source, w, dimension, n_max, region.r_out)?;
        let sc = solve_modes(&cloaked(w)?, w, &e)?;
        let sf = solve_modes(&LayeredMedium::homogeneous(dimension, w), w, &e)?;
        let c = per_key(&sc)?;
        let f = per_key(&sf)?;
        let diff = c.iter().zip(&f).map(|(a, b)| a - b).collect();
        let probes = probes.iter().map(|x| Ok((eval_field(&sc, x)?, eval_field(&sf, x)?))).collect::<Result<_>>()?;
        Ok(FrequencyData { diff, cloaked: c, probes })
    })
}

/// Acoustic cloak of `config` against free space; `L^2(region)` visibility.
pub fn synthesize_timedomain(
    config: &CloakConfig,
    source: &SourceSpec,
    n_max: usize,
    pulse: &PulseSpec,
    grid: &FrequencyGrid,
    region: Annulus,
    probes: &[Point],
) -> Result<TimeDomainResult> {
    config.validate()?;
    if config.variant.is_maxwell() {
        return Err(CloakError::InvalidInput("use synthesize_timedomain_em for Maxwell variants".into()));
    }
    synthesize_acoustic_media(
        config.dimension,
        |w| assemble_equivalent_medium(config, w),
        source,
        n_max,
        pulse,
        grid,
        region,
        probes,
    )
}

/// Maxwell cloak of `config` against vacuum; `H(curl)(region)` visibility and
/// `int |E|^2 + |H|^2` energy of the cloaked field.
pub fn synthesize_timedomain_em(
    config: &CloakConfig,
    current: &CurrentSpec,
    n_max: usize,
    pulse: &PulseSpec,
    grid: &FrequencyGrid,
    region: Annulus,
) -> Result<TimeDomainResult> {
    config.validate()?;
    if !config.variant.is_maxwell() {
        return Err(CloakError::InvalidInput("use synthesize_timedomain for acoustic variants".into()));
    }
    let nodes = region_nodes(region, pulse.omega_cut());
    let reference = expand_source_em(current, 1.0, n_max, region.r_out)?;
    let keys: Vec<ModeKey> = {
        let mut k: Vec<ModeKey> = reference.modes.iter().flat_map(|m| m.keys.iter().map(|x| x.0)).collect();
        k.sort();
        k.dedup();
        k
    };
    // diff columns: 12 channels per node; energy uses the first 6
    let mut weights = Vec::new();
    for key in &keys {
        let cw = channel_weights(key.n);
        for &(r, w) in &nodes {
            for j in 0..12 {
                weights.push(w * r * r * key.norm_sq(3) * cw[j % 3]);
            }
        }
    }
    let per_key = |sols: &[MultipoleSolution]| -> Result<Vec<C64>> {
        let mut map: BTreeMap<ModeKey, Vec<C64>> =
            keys.iter().map(|k| (*k, vec![C64::new(0.0, 0.0); 12 * nodes.len()])).collect();
        for s in sols {
            let mut vals = Vec::with_capacity(12 * nodes.len());
            for &(r, _) in &nodes {
                vals.extend(field_channels(s, r)?);
            }
            for (k, f) in &s.keys {
                let slot = map
                    .get_mut(k)
                    .ok_or_else(|| CloakError::Numerical(format!("key {k:?} changed across frequencies")))?;
                for (o, v) in slot.iter_mut().zip(&vals) {
                    *o += f * v;
                }
            }
        }
        Ok(map.into_values().flatten().collect())
    };
    synthesize(pulse, grid, &weights, 0, |w| {
        let e = expand_source_em(current, w, n_max, region.r_out)?;
        let sc = solve_multipoles(&assemble_equivalent_medium_em(config, w)?, w, &e)?;
        let sf = solve_multipoles(&EmLayeredMedium::vacuum(), w, &e)?;
        let c = per_key(&sc)?;
        let f = per_key(&sf)?;
        let diff = c.iter().zip(&f).map(|(a, b)| a - b).collect();
        // curl channels carry no energy
        let cloaked = c.iter().enumerate().map(|(i, v)| if i % 12 < 6 { *v } else { C64::new(0.0, 0.0) }).collect();
        Ok(FrequencyData { diff, cloaked, probes: vec![] })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalityReport {
    /// `max |u(t)|` before `arrival`, relative to the peak of the series.
    pub pre_arrival: f64,
    pub peak: f64,
}

/// Pre-arrival residual of a probe series for a wave front reaching the
/// probe at `arrival`.
pub fn causality_check(times: &[f64], series: &[f64], arrival: f64) -> CausalityReport {
    let peak = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let early = times.iter().zip(series).filter(|(t, _)| **t < arrival).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    CausalityReport { pre_arrival: if peak > 0.0 { early / peak } else { 0.0 }, peak }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `max_t energy(t) / (int_0^t ||J(s)|| ds)^2`.
    pub constant: f64,
    pub max_energy: f64,
}

/// Fits the constant of `energy(t) <= C (int_0^t ||J||)^2` with
/// `||J(s)|| = |chi(s)| source_norm`.
pub fn energy_check(result: &TimeDomainResult, pulse: &PulseSpec, source_norm: f64) -> EnergyReport {
    let nodes = time_nodes(pulse);
    let mut constant: f64 = 0.0;
    for (t, e) in result.times.iter().zip(&result.energy) {
        let drive: f64 =
            nodes.iter().filter(|(s, _)| s <= t).map(|(s, w)| w * pulse.eval(*s).abs()).sum::<f64>() * source_norm;
        if drive > 1e-12 * source_norm * pulse.amplitude.abs() {
            constant = constant.max(e / (drive * drive));
        }
    }
    EnergyReport { constant, max_energy: result.energy.iter().copied().fold(0.0, f64::max) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ObjectParams, Variant};

    fn grid(pulse: &PulseSpec) -> FrequencyGrid {
        FrequencyGrid::for_pulse(pulse, 4.0, 3.5, 512).unwrap()
    }

    #[test]
    fn drude_lorentz_values() {
        let (sn, sd, wc) = (2.0, 0.5, 3.0);
        assert!((drude_lorentz_coeff(sn, sd, wc, 0.0) - sn / (wc * wc)).norm() < 1e-15);
        let at = drude_lorentz_coeff(sn, sd, wc, wc);
        assert!((at - C64::new(0.0, sn / (sd * wc))).norm() < 1e-14);
        for i in 1..1000 {
            let w = 10.0 * wc * i as f64 / 1000.0;
            assert!(drude_lorentz_coeff(sn, sd, wc, w).im > 0.0);
        }
    }

    #[test]
    fn plancherel_and_shift() {
        let p = PulseSpec::new(2.0, 0.8);
        let g = grid(&p);
        let (t, f) = plancherel_sums(&p, &g).unwrap();
        assert!((t - f).abs() < 1e-8 * t, "{t} {f}");
        let shifted = PulseSpec { delay: 0.7, ..p };
        let g2 = FrequencyGrid::for_pulse(&shifted, 4.0, 3.5, 512).unwrap();
        let a = pulse_spectrum(&p, &g2).unwrap();
        let b = pulse_spectrum(&shifted, &g2).unwrap();
        for k in 0..g2.n {
            let w = g2.omega(k);
            assert!((b[k] - a[k] * C64::from_polar(1.0, w * 0.7)).norm() < 1e-10);
        }
        let zero = PulseSpec { amplitude: 0.0, ..p };
        assert!(pulse_spectrum(&zero, &g).unwrap().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn under_resolved_grid_rejected() {
        let p = PulseSpec::new(2.0, 0.8);
        let bad = FrequencyGrid { n: 512, d_omega: 1.0, t_window: 2.0 * PI };
        assert!(pulse_spectrum(&p, &bad).is_err());
        assert!(FrequencyGrid::for_pulse(&p, 4.0, 3.5, 4).is_err());
    }

    #[test]
    fn inversion_recovers_pulse() {
        let p = PulseSpec::new(2.0, 0.8);
        let g = grid(&p);
        let s = pulse_spectrum(&p, &g).unwrap();
        let u = inverse_transform(&g, &s);
        for (t, v) in g.times().iter().zip(&u) {
            assert!((v - p.eval(*t)).abs() < 1e-9, "{t}: {v} vs {}", p.eval(*t));
        }
    }

    #[test]
    fn free_field_is_causal_and_homogeneous_cloak_invisible() {
        let p = PulseSpec::new(2.0, 0.8);
        let g = FrequencyGrid::for_pulse(&p, 4.0, 3.5, 2048).unwrap();
        let src = SourceSpec::ModalShell { key: ModeKey::zonal(0), r_in: 2.5, r_out: 3.5, norm: 1.0 };
        let probe = [0.0, 0.0, 7.0];
        let res = synthesize_acoustic_media(
            3,
            |w| Ok(LayeredMedium::homogeneous(3, w)),
            &src,
            0,
            &p,
            &g,
            Annulus::new(2.0, 4.0),
            &[probe],
        )
        .unwrap();
        assert!(res.sup_visibility <= 1e-8 * res.energy.iter().copied().fold(0.0, f64::max).sqrt());
        let c = causality_check(&res.times, &res.probes_free[0], 7.0 - 3.5);
        assert!(c.peak > 0.0 && c.pre_arrival < 1e-6, "{c:?}");
    }

    #[test]
    fn energy_scales_quadratically() {
        let cfg = CloakConfig::new(3, 0.1, Variant::MaxwellLossy, ObjectParams { lambda1: 2.0, lambda2: 2.0 }).unwrap();
        let cur = CurrentSpec::ElectricDipole { radius: 3.0 };
        let p = PulseSpec::new(2.0, 0.8);
        let g = grid(&p);
        let a = synthesize_timedomain_em(&cfg, &cur, 2, &p, &g, Annulus::new(2.0, 4.0)).unwrap();
        let p2 = PulseSpec { amplitude: 2.0, ..p };
        let b = synthesize_timedomain_em(&cfg, &cur, 2, &p2, &g, Annulus::new(2.0, 4.0)).unwrap();
        let ea = energy_check(&a, &p, 1.0);
        let eb = energy_check(&b, &p2, 1.0);
        assert!(ea.max_energy > 0.0);
        assert!((eb.max_energy / ea.max_energy - 4.0).abs() < 1e-9 * 4.0);
        assert!((eb.constant / ea.constant - 1.0).abs() < 1e-9);
        let z = PulseSpec { amplitude: 0.0, ..p };
        let zr = synthesize_timedomain_em(&cfg, &cur, 2, &z, &g, Annulus::new(2.0, 4.0));
        // an all-zero spectrum has no active frequency
        assert!(zr.unwrap().energy.iter().all(|e| *e == 0.0));
    }
}
