//! Finite atomic measures on the unit circle and their moments.

use std::f64::consts::TAU;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closest an atom may sit to the point 1, in radians.
pub const MIN_ANGLE: f64 = 1e-9;

/// A point mass `weight · δ_ξ` with `ξ = exp(i·angle)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub angle: f64,
    pub weight: f64,
}

impl Atom {
    pub fn point(&self) -> c64 {
        c64::cis(self.angle)
    }

    /// `|1 − ξ|`, computed as `2|sin(angle/2)|` to avoid cancellation.
    pub fn distance_to_one(&self) -> f64 {
        2.0 * (0.5 * self.angle).sin().abs()
    }
}

/// A validated finite atomic measure with no atom at 1. Atoms are sorted by angle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    /// Validates `(angle, weight)` pairs and sorts them by angle.
    ///
    /// ```
    /// use cocyclic::measure::AtomicMeasure;
    /// let mu = AtomicMeasure::new([(std::f64::consts::PI, 1.0)]).unwrap();
    /// assert_eq!(mu.moment(4.0), 1.0 / 16.0);
    /// assert!(AtomicMeasure::new([(0.0, 1.0)]).is_err());
    /// ```
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut atoms = Vec::new();
        for (angle, weight) in pairs {
            if !angle.is_finite() || !(0.0..=TAU).contains(&angle) {
                return Err(Error::AngleOutOfRange { angle });
            }
            if angle < MIN_ANGLE || TAU - angle < MIN_ANGLE {
                return Err(Error::AtomAtOne { angle });
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::NonPositiveWeight { weight });
            }
            atoms.push(Atom { angle, weight });
        }
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        atoms.sort_by(|a, b| a.angle.total_cmp(&b.angle));
        if let Some(w) = atoms.windows(2).find(|w| w[1].angle - w[0].angle < MIN_ANGLE) {
            return Err(Error::DuplicateAngle { angle: w[1].angle });
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn points(&self) -> Vec<c64> {
        self.atoms.iter().map(Atom::point).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `Σ_j w_j / |1 − ξ_j|^q`.
    pub fn moment(&self, q: f64) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight / a.distance_to_one().powf(q))
            .sum()
    }

    /// The measure `c·μ`.
    ///
    /// # Panics
    /// If `c` is not positive and finite.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c.is_finite() && c > 0.0, "scale factor must be positive");
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    angle: a.angle,
                    weight: a.weight * c,
                })
                .collect(),
        }
    }

    /// Scales by `min(1, budget/𝔐_q(μ))` so the moment does not exceed `budget`.
    pub fn rescale_to_budget(&self, q: f64, budget: f64) -> Self {
        let c = (budget / self.moment(q)).min(1.0);
        if c == 1.0 {
            self.clone()
        } else {
            self.scaled(c)
        }
    }
}

/// Measures `μ_1, …, μ_K` scaled so that `Σ_k 𝔐_q(μ_k)^{1/q} ≤ budget`.
#[derive(Debug, Clone, Serialize)]
pub struct MultiMeasureSystem {
    components: Vec<AtomicMeasure>,
    q: f64,
    budget: f64,
}

impl MultiMeasureSystem {
    /// Measures that already satisfy the budget are kept as given. Otherwise component
    /// `k` (1-based) gets the allowance `a_k = budget·(3/4)·4^{1−k}` and is scaled by
    /// `min(1, a_k^q / 𝔐_q(μ_k))`, so `𝔐_q^{1/q} ≤ a_k` and the allowances sum to less
    /// than `budget`.
    pub fn new(measures: Vec<AtomicMeasure>, q: f64, budget: f64) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::EmptySystem);
        }
        if !(q > 3.0) {
            return Err(Error::InvalidExponent { q, min: 3.0 });
        }
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::Config(format!("budget {budget} must be positive")));
        }
        let total: f64 = measures.iter().map(|mu| mu.moment(q).powf(1.0 / q)).sum();
        if total <= budget {
            return Ok(Self {
                components: measures,
                q,
                budget,
            });
        }
        let components = measures
            .iter()
            .enumerate()
            .map(|(k, mu)| {
                let allowance = budget * 0.75 * 0.25f64.powi(k as i32);
                mu.rescale_to_budget(q, allowance.powf(q))
            })
            .collect();
        Ok(Self {
            components,
            q,
            budget,
        })
    }

    pub fn components(&self) -> &[AtomicMeasure] {
        &self.components
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// `Σ_k 𝔐_q(μ_k)^{1/q}`.
    pub fn moment_sum(&self) -> f64 {
        self.components
            .iter()
            .map(|mu| mu.moment(self.q).powf(1.0 / self.q))
            .sum()
    }
}

/// An angle in turns, either a plain number or an exact `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AngleTurns {
    Number(f64),
    Rational(String),
}

impl AngleTurns {
    pub fn to_radians(&self) -> Result<f64> {
        let turns = match self {
            AngleTurns::Number(x) => *x,
            AngleTurns::Rational(s) => parse_rational(s)?,
        };
        if !(turns > 0.0 && turns < 1.0) {
            return Err(Error::Config(format!(
                "angle_turns {turns} must lie in (0, 1)"
            )));
        }
        Ok(TAU * turns)
    }
}

fn parse_rational(s: &str) -> Result<f64> {
    let bad = || Error::Config(format!("cannot parse angle_turns {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(p as f64 / q as f64)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub angle_turns: AngleTurns,
    pub weight: f64,
}

/// On-disk form of a measure: `{"atoms": [{"angle_turns": "1/2", "weight": 1.0}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub atoms: Vec<AtomConfig>,
}

impl MeasureConfig {
    pub fn to_measure(&self) -> Result<AtomicMeasure> {
        let pairs = self
            .atoms
            .iter()
            .map(|a| Ok((a.angle_turns.to_radians()?, a.weight)))
            .collect::<Result<Vec<_>>>()?;
        AtomicMeasure::new(pairs)
    }
}

/// The three measures every check in the crate is run against.
pub mod fixtures {
    use super::*;
    use std::f64::consts::PI;

    /// `δ_{−1}`.
    pub fn delta_minus_one() -> AtomicMeasure {
        AtomicMeasure::new([(PI, 1.0)]).unwrap()
    }

    /// `½(δ_i + δ_{−i})`.
    pub fn plus_minus_i() -> AtomicMeasure {
        AtomicMeasure::new([(PI / 2.0, 0.5), (1.5 * PI, 0.5)]).unwrap()
    }

    /// Atoms at angles `2π/3, π, 3π/2` with weights `0.2, 0.5, 0.3`.
    pub fn three_atom() -> AtomicMeasure {
        AtomicMeasure::new([(TAU / 3.0, 0.2), (PI, 0.5), (1.5 * PI, 0.3)]).unwrap()
    }

    /// `(id, measure)` for all fixtures.
    pub fn all() -> Vec<(&'static str, AtomicMeasure)> {
        vec![
            ("delta_minus_one", delta_minus_one()),
            ("plus_minus_i", plus_minus_i()),
            ("three_atom", three_atom()),
        ]
    }
}
