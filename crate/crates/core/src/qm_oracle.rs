//! Closed-form transmitted-port statistics of the Eberhardt state
//! `(1+r²)^{-1/2} (|x_A y_B⟩ + r |y_A x_B⟩)` and a search for CH-violating
//! analyzer settings.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use libm::{atan, cos, sin, sqrt};

use crate::{model::Angle, Error, Result, SettingsQuad};

/// Refinement stops once the coordinate-descent step drops below this (rad).
pub const MIN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EberhardtState {
    r: f64,
}

impl EberhardtState {
    pub fn new(r: f64) -> Result<Self> {
        if r.is_finite() && r >= 0.0 {
            Ok(Self { r })
        } else {
            Err(Error::InvalidAmplitude(r))
        }
    }

    pub fn from_r2(r2: f64) -> Result<Self> {
        if !(r2.is_finite() && r2 >= 0.0) {
            return Err(Error::InvalidAmplitude(r2));
        }
        Self::new(sqrt(r2))
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn r2(&self) -> f64 {
        self.r * self.r
    }

    fn norm(&self) -> f64 {
        1.0 / (1.0 + self.r2())
    }

    /// `P_AB(α, β) = [cos α sin β + r sin α cos β]² / (1 + r²)`
    pub fn prob_joint(&self, a: Angle, b: Angle) -> f64 {
        let (a, b) = (a.radians(), b.radians());
        let amp = cos(a) * sin(b) + self.r * sin(a) * cos(b);
        self.norm() * amp * amp
    }

    /// `P_A(α) = [cos² α + r² sin² α] / (1 + r²)`
    pub fn prob_single_a(&self, a: Angle) -> f64 {
        let (c, s) = (cos(a.radians()), sin(a.radians()));
        self.norm() * (c * c + self.r2() * s * s)
    }

    /// `P_B(β) = [r² cos² β + sin² β] / (1 + r²)`
    pub fn prob_single_b(&self, b: Angle) -> f64 {
        let (c, s) = (cos(b.radians()), sin(b.radians()));
        self.norm() * (self.r2() * c * c + s * s)
    }

    /// Settings maximising `J` over the family `α' = π/2, β = 0,
    /// tan β' = −r tan α`. On that family `J ∝ sin²α (1 − r²/(cos²α + r² sin²α))`,
    /// maximal at `sin²α = 1/(1+r)`, where `tan β' = −√r`.
    pub fn family_optimum_quad(&self) -> SettingsQuad {
        let alpha = libm::asin(sqrt(1.0 / (1.0 + self.r)));
        let beta_prime = -atan(sqrt(self.r));
        SettingsQuad::new(alpha, FRAC_PI_2, 0.0, beta_prime).expect("finite angles")
    }

    /// `r²(1−r) / ((1+r)(1+r²))`, the value of `J` at [`Self::family_optimum_quad`].
    pub fn family_optimum_j(&self) -> f64 {
        let r = self.r;
        r * r * (1.0 - r) / ((1.0 + r) * (1.0 + r * r))
    }
}

/// The six probabilities entering `J`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChTerms {
    /// `P_AB(α, β)`
    pub ab: f64,
    /// `P_AB(α, β')`
    pub abp: f64,
    /// `P_AB(α', β)`
    pub apb: f64,
    /// `P_AB(α', β')`
    pub apbp: f64,
    /// `P_B(β)`
    pub single_b: f64,
    /// `P_A(α')`
    pub single_a: f64,
}

impl ChTerms {
    /// `P_AB(α,β) − P_AB(α,β') + P_AB(α',β) + P_AB(α',β') − P_B(β) − P_A(α')`
    pub fn j(&self) -> f64 {
        self.ab - self.abp + self.apb + self.apbp - self.single_b - self.single_a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmJReport {
    pub r2: f64,
    pub quad: SettingsQuad,
    pub terms: ChTerms,
    pub j: f64,
}

pub fn j_value(state: &EberhardtState, quad: &SettingsQuad) -> QmJReport {
    let terms = ChTerms {
        ab: state.prob_joint(quad.alpha, quad.beta),
        abp: state.prob_joint(quad.alpha, quad.beta_prime),
        apb: state.prob_joint(quad.alpha_prime, quad.beta),
        apbp: state.prob_joint(quad.alpha_prime, quad.beta_prime),
        single_b: state.prob_single_b(quad.beta),
        single_a: state.prob_single_a(quad.alpha_prime),
    };
    QmJReport {
        r2: state.r2(),
        quad: *quad,
        terms,
        j: terms.j(),
    }
}

fn j_at(state: &EberhardtState, v: [f64; 4]) -> f64 {
    j_value(
        state,
        &SettingsQuad::from_array(v).expect("finite search point"),
    )
    .j
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub best: QmJReport,
    /// Best `J` after the grid stage and after every refinement sweep.
    pub trace: Vec<f64>,
}

/// Coarse grid over `[0, π)⁴` followed by coordinate descent.
///
/// The grid is visited in lexicographic order of `(α, α', β, β')` and only a
/// strictly larger `J` replaces the incumbent, so ties resolve to the
/// lexicographically smallest quad. Refinement tries `±step` on each angle in
/// turn, halving the step after a sweep with no improvement, and stops after
/// `max_sweeps` sweeps or once the step falls below [`MIN_STEP`].
pub fn find_violation(
    state: &EberhardtState,
    grid: usize,
    max_sweeps: usize,
) -> Result<ScanResult> {
    if grid < 8 {
        return Err(Error::GridTooCoarse(grid));
    }
    let h = PI / grid as f64;
    let axis: Vec<f64> = (0..grid).map(|k| k as f64 * h).collect();

    let mut best = [0.0; 4];
    let mut best_j = f64::NEG_INFINITY;
    for &a in &axis {
        for &ap in &axis {
            for &b in &axis {
                for &bp in &axis {
                    let v = [a, ap, b, bp];
                    let j = j_at(state, v);
                    if j > best_j {
                        best_j = j;
                        best = v;
                    }
                }
            }
        }
    }

    let mut trace = alloc::vec![best_j];
    let mut step = h / 2.0;
    for _ in 0..max_sweeps {
        if step < MIN_STEP {
            break;
        }
        let mut improved = false;
        for coord in 0..4 {
            for dir in [1.0, -1.0] {
                let mut cand = best;
                cand[coord] += dir * step;
                let j = j_at(state, cand);
                if j > best_j {
                    best_j = j;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
        trace.push(best_j);
    }

    let quad = SettingsQuad::from_array(best)?;
    Ok(ScanResult {
        best: j_value(state, &quad),
        trace,
    })
}
