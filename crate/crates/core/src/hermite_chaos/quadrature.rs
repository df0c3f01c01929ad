use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use super::{normal_pdf, normal_sf, normalized_hermite_all};
use crate::{Error, Result};

/// Composite Gauss–Legendre integration against the standard Gaussian
/// weight on `[−half_width, half_width]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSettings {
    /// Integration range half-width `R`; the neglected mass `2(1 − Φ(R))`
    /// must stay below `1e−14`.
    pub half_width: f64,
    /// Gauss–Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Panel width before the first refinement.
    pub initial_panel_width: f64,
    /// Refinement stops once no coefficient moves by more than this.
    pub tolerance: f64,
    /// Number of panel halvings allowed before giving up.
    pub max_refinements: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            half_width: 10.0,
            nodes_per_panel: 20,
            initial_panel_width: 1.0,
            tolerance: 1e-10,
            max_refinements: 12,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || 2.0 * normal_sf(self.half_width) >= 1e-14 {
            return Err(Error::invalid(
                "half_width",
                format!("{} leaves Gaussian mass >= 1e-14 outside the range", self.half_width),
            ));
        }
        if self.nodes_per_panel == 0 {
            return Err(Error::invalid("nodes_per_panel", "must be positive"));
        }
        if !(self.initial_panel_width > 0.0) {
            return Err(Error::invalid("initial_panel_width", "must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// Orthonormal Hermite projections of a function together with its squared
/// `L₂(γ)` norm.
#[derive(Debug, Clone)]
pub struct GaussianProjection {
    /// `∫ f He_n/√(n!) dγ` for `n = 0..=n_max`.
    pub coeffs: Vec<f64>,
    /// `∫ f² dγ`.
    pub norm_sq: f64,
    /// Largest change between the last two refinement levels.
    pub last_change: f64,
    pub panels: usize,
}

/// Projects `f` onto `He_0/√0!, …, He_{n_max}/√(n_max!)` in `L₂(γ)`.
///
/// Panels never straddle a breakpoint, so piecewise-smooth integrands
/// converge at the Gauss–Legendre rate.
pub fn gaussian_projection<F>(
    f: F,
    breakpoints: &[f64],
    n_max: usize,
    settings: &QuadratureSettings,
) -> Result<GaussianProjection>
where
    F: Fn(f64) -> f64,
{
    settings.validate()?;
    let r = settings.half_width;
    let mut cuts: Vec<f64> = std::iter::once(-r)
        .chain(breakpoints.iter().copied().filter(|b| b.is_finite() && b.abs() < r))
        .chain(std::iter::once(r))
        .collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();

    let degree = NonZeroUsize::new(settings.nodes_per_panel)
        .ok_or_else(|| Error::invalid("nodes_per_panel", "must be positive"))?;
    let rule = GaussLegendre::new(degree);
    let pairs = rule.as_node_weight_pairs();

    let mut basis = Vec::with_capacity(n_max + 1);
    let mut integrate = |level: usize| -> (Vec<f64>, f64, usize) {
        let mut coeffs = vec![0.0; n_max + 1];
        let mut norm_sq = 0.0;
        let mut panels = 0;
        for seg in cuts.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            let base = ((hi - lo) / settings.initial_panel_width).ceil().max(1.0) as usize;
            let count = base << level;
            let width = (hi - lo) / count as f64;
            for p in 0..count {
                let a = lo + p as f64 * width;
                let half = 0.5 * width;
                let mid = a + half;
                for &(node, weight) in pairs {
                    let x = mid + half * node;
                    let fx = f(x);
                    let w = weight * half * normal_pdf(x);
                    normalized_hermite_all(n_max, x, &mut basis);
                    for (c, h) in coeffs.iter_mut().zip(&basis) {
                        *c += w * fx * h;
                    }
                    norm_sq += w * fx * fx;
                }
            }
            panels += count;
        }
        (coeffs, norm_sq, panels)
    };

    let (mut coeffs, mut norm_sq, _) = integrate(0);
    let mut last_change = f64::INFINITY;
    for level in 1..=settings.max_refinements {
        let (next, next_norm, next_panels) = integrate(level);
        last_change = coeffs.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold((norm_sq - next_norm).abs(), f64::max);
        coeffs = next;
        norm_sq = next_norm;
        if last_change < settings.tolerance {
            return Ok(GaussianProjection { coeffs, norm_sq, last_change, panels: next_panels });
        }
    }
    Err(Error::QuadratureNotConverged { refinements: settings.max_refinements, residual: last_change })
}
