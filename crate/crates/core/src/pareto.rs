//! Bi-objective (improvement, uncertainty) frontiers and distance-based
//! rationality verdicts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{BoxDomain, GpPosterior};
use crate::kernel::KernelKind;
use crate::scalar::Scalar;
use crate::uncertainty::{distance_unchecked, EntropyField, Incumbent, UqMeasure};

/// Image of a candidate decision in objective space. Both objectives are maximized.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectivePair<T> {
    pub improvement: T,
    pub uncertainty: T,
    pub source: Vec<T>,
}

impl<T: Scalar> ObjectivePair<T> {
    pub fn new(improvement: T, uncertainty: T, source: Vec<T>) -> Self {
        Self {
            improvement,
            uncertainty,
            source,
        }
    }

    /// Pair with no source point, for working directly in objective space.
    pub fn bare(improvement: T, uncertainty: T) -> Self {
        Self::new(improvement, uncertainty, Vec::new())
    }

    /// `self` strongly dominates `other`: no worse in both objectives and
    /// strictly better in at least one.
    #[inline]
    pub fn dominates(&self, other: &Self) -> bool {
        self.improvement >= other.improvement
            && self.uncertainty >= other.uncertainty
            && (self.improvement > other.improvement || self.uncertainty > other.uncertainty)
    }
}

/// Indices (ascending) of the non-dominated members of `pairs`.
///
/// Runs in `O(m log m)`; exact ties in both objectives are all kept.
pub fn frontier_indices<T: Scalar>(pairs: &[ObjectivePair<T>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&pairs[a], &pairs[b]);
        pb.improvement
            .partial_cmp(&pa.improvement)
            .unwrap()
            .then(pb.uncertainty.partial_cmp(&pa.uncertainty).unwrap())
    });
    let mut keep = Vec::new();
    let mut best_u = T::neg_infinity();
    let mut start = 0;
    while start < order.len() {
        let zeta = pairs[order[start]].improvement;
        let mut end = start;
        while end < order.len() && pairs[order[end]].improvement == zeta {
            end += 1;
        }
        // group sorted by u descending: its head holds the group max
        let u_max = pairs[order[start]].uncertainty;
        if u_max > best_u {
            keep.extend(
                order[start..end]
                    .iter()
                    .copied()
                    .take_while(|&i| pairs[i].uncertainty == u_max),
            );
            best_u = u_max;
        }
        start = end;
    }
    keep.sort_unstable();
    keep
}

/// Per-objective `(min, max)` over a pair set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveBounds<T> {
    pub improvement: (T, T),
    pub uncertainty: (T, T),
}

impl<T: Scalar> ObjectiveBounds<T> {
    fn of(pairs: &[ObjectivePair<T>]) -> Self {
        let mut b = Self {
            improvement: (T::infinity(), T::neg_infinity()),
            uncertainty: (T::infinity(), T::neg_infinity()),
        };
        for p in pairs {
            b.include(p);
        }
        b
    }

    fn include(&mut self, p: &ObjectivePair<T>) {
        self.improvement = (
            self.improvement.0.min(p.improvement),
            self.improvement.1.max(p.improvement),
        );
        self.uncertainty = (
            self.uncertainty.0.min(p.uncertainty),
            self.uncertainty.1.max(p.uncertainty),
        );
    }

    fn spans(&self) -> (T, T) {
        let span = |(lo, hi): (T, T)| {
            let w = hi - lo;
            if w > T::zero() {
                w
            } else {
                T::one()
            }
        };
        (span(self.improvement), span(self.uncertainty))
    }
}

/// Frontier approximation built from a finite candidate set.
#[derive(Clone, Debug)]
pub struct ParetoFrontier<T> {
    grid: Vec<ObjectivePair<T>>,
    members: Vec<usize>,
    bounds: ObjectiveBounds<T>,
}

impl<T: Scalar> ParetoFrontier<T> {
    pub fn new(grid: Vec<ObjectivePair<T>>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::input("frontier needs at least one objective pair"));
        }
        if grid
            .iter()
            .any(|p| !p.improvement.is_finite() || !p.uncertainty.is_finite())
        {
            return Err(Error::Numerical("non-finite objective pair".into()));
        }
        let members = frontier_indices(&grid);
        let bounds = ObjectiveBounds::of(&grid);
        Ok(Self { grid, members, bounds })
    }

    /// The full candidate set the frontier was built from.
    pub fn grid(&self) -> &[ObjectivePair<T>] {
        &self.grid
    }

    /// Indices into [`Self::grid`] of the frontier members.
    pub fn member_indices(&self) -> &[usize] {
        &self.members
    }

    pub fn members(&self) -> impl Iterator<Item = &ObjectivePair<T>> {
        self.members.iter().map(|&i| &self.grid[i])
    }

    pub fn into_members(self) -> Vec<ObjectivePair<T>> {
        let mut grid: Vec<Option<ObjectivePair<T>>> = self.grid.into_iter().map(Some).collect();
        self.members
            .iter()
            .map(|&i| grid[i].take().expect("member index unique"))
            .collect()
    }

    pub fn bounds(&self) -> ObjectiveBounds<T> {
        self.bounds
    }

    /// True when no candidate strongly dominates `query`.
    pub fn is_nondominated(&self, query: &ObjectivePair<T>) -> bool {
        // anything dominating the query is itself dominated by (or is) a member
        !self.members().any(|m| m.dominates(query))
    }

    /// Squared distance from `query` to the frontier of `grid ∪ {query}`.
    pub fn distance(&self, query: &ObjectivePair<T>, opts: &DistanceOptions<T>) -> RationalityVerdict<T> {
        let distance = if self.is_nondominated(query) {
            T::zero()
        } else {
            let (sz, su) = if opts.normalize {
                let mut b = self.bounds;
                b.include(query);
                b.spans()
            } else {
                (T::one(), T::one())
            };
            self.members()
                .map(|m| {
                    let dz = (query.improvement - m.improvement) / sz;
                    let du = (query.uncertainty - m.uncertainty) / su;
                    dz * dz + du * du
                })
                .fold(T::infinity(), T::min)
        };
        RationalityVerdict {
            distance,
            is_rational: distance < opts.threshold,
            threshold: opts.threshold,
        }
    }
}

/// Frontier of `pairs` under strong dominance.
pub fn pareto_frontier<T: Scalar>(pairs: Vec<ObjectivePair<T>>) -> Result<ParetoFrontier<T>> {
    ParetoFrontier::new(pairs)
}

/// Default rationality threshold on the frontier distance.
pub const DEFAULT_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceOptions<T> {
    /// Min–max scale each objective over the candidates plus the query.
    pub normalize: bool,
    pub threshold: T,
}

impl<T: Scalar> Default for DistanceOptions<T> {
    fn default() -> Self {
        Self {
            normalize: true,
            threshold: T::lit(DEFAULT_THRESHOLD),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalityVerdict<T> {
    pub distance: T,
    pub is_rational: bool,
    pub threshold: T,
}

/// Distance of `query` from the frontier of `pairs ∪ {query}`.
pub fn frontier_distance<T: Scalar>(
    query: &ObjectivePair<T>,
    pairs: &[ObjectivePair<T>],
    opts: &DistanceOptions<T>,
) -> Result<RationalityVerdict<T>> {
    Ok(ParetoFrontier::new(pairs.to_vec())?.distance(query, opts))
}

/// Full Cartesian lattice over `domain`, endpoints included, last dimension
/// varying fastest.
pub fn build_grid<T: Scalar>(domain: &BoxDomain<T>, counts: &[usize]) -> Result<Vec<Vec<T>>> {
    if counts.len() != domain.dim() {
        return Err(Error::input(format!(
            "grid has {} resolutions for a {}-dimensional domain",
            counts.len(),
            domain.dim()
        )));
    }
    if let Some(&c) = counts.iter().find(|&&c| c < 2) {
        return Err(Error::input(format!("grid resolution must be >= 2, got {c}")));
    }
    let axes: Vec<Vec<T>> = counts
        .iter()
        .zip(domain.lower().iter().zip(domain.upper()))
        .map(|(&c, (&lo, &hi))| {
            let last = T::from_usize(c - 1).unwrap();
            (0..c)
                .map(|i| {
                    if i == c - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * (T::from_usize(i).unwrap() / last)
                    }
                })
                .collect()
        })
        .collect();
    let total: usize = counts.iter().product();
    let mut grid = Vec::with_capacity(total);
    let mut idx = vec![0usize; counts.len()];
    for _ in 0..total {
        grid.push(idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect());
        for d in (0..counts.len()).rev() {
            idx[d] += 1;
            if idx[d] < counts[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(grid)
}

/// Maps candidate points to `(ζ, u)` for one GP and one measure.
pub struct ObjectiveMap<'a, T> {
    gp: &'a GpPosterior<T>,
    measure: UqMeasure,
    incumbent: Incumbent<T>,
    prefix: &'a [Vec<T>],
    entropy: Option<EntropyField<T>>,
}

impl<'a, T: Scalar> ObjectiveMap<'a, T> {
    pub fn new(
        gp: &'a GpPosterior<T>,
        measure: UqMeasure,
        incumbent: Incumbent<T>,
        prefix: &'a [Vec<T>],
    ) -> Result<Self> {
        let entropy = match measure {
            UqMeasure::Entropy => Some(EntropyField::new(gp, prefix)?),
            UqMeasure::Distance if prefix.is_empty() => {
                return Err(Error::input("distance measure needs at least one previous decision"))
            }
            _ => None,
        };
        Ok(Self {
            gp,
            measure,
            incumbent,
            prefix,
            entropy,
        })
    }

    pub fn pair(&self, x: &[T]) -> ObjectivePair<T> {
        let (improvement, uncertainty) = match self.measure {
            UqMeasure::Sigma => {
                let (m, v) = self.gp.predict(x);
                (m - self.incumbent.0, v.sqrt())
            }
            UqMeasure::Entropy => (
                self.gp.posterior_mean(x) - self.incumbent.0,
                self.entropy.as_ref().expect("entropy field built").eval(x),
            ),
            UqMeasure::Distance => (
                self.gp.posterior_mean(x) - self.incumbent.0,
                distance_unchecked(self.prefix, x),
            ),
        };
        ObjectivePair::new(improvement, uncertainty, x.to_vec())
    }
}

/// `Ψ = {(ζ(x_j), u(x_j))}` over a candidate grid, in grid order.
pub fn evaluate_objectives<T: Scalar>(
    gp: &GpPosterior<T>,
    grid: &[Vec<T>],
    measure: UqMeasure,
    incumbent: Incumbent<T>,
    prefix: &[Vec<T>],
) -> Result<Vec<ObjectivePair<T>>> {
    if grid.is_empty() {
        return Err(Error::input("empty candidate grid"));
    }
    let map = ObjectiveMap::new(gp, measure, incumbent, prefix)?;
    Ok(grid.iter().map(|x| map.pair(x)).collect())
}

/// Per-kernel frontier distances for one decision, plus their minimum.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionClassification<T> {
    pub per_kernel: Vec<(KernelKind, RationalityVerdict<T>)>,
    pub min_distance: T,
    pub is_rational: bool,
}

/// Maps `x_next` through every GP and measures its distance to each GP's
/// frontier over `grid`.
pub fn classify_decision<T: Scalar>(
    gps: &[GpPosterior<T>],
    grid: &[Vec<T>],
    measure: UqMeasure,
    incumbent: Incumbent<T>,
    prefix: &[Vec<T>],
    x_next: &[T],
    opts: &DistanceOptions<T>,
) -> Result<DecisionClassification<T>> {
    if gps.is_empty() {
        return Err(Error::input("classification needs at least one GP"));
    }
    let mut per_kernel = Vec::with_capacity(gps.len());
    for gp in gps {
        let map = ObjectiveMap::new(gp, measure, incumbent, prefix)?;
        let frontier = ParetoFrontier::new(grid.iter().map(|x| map.pair(x)).collect())?;
        let query = map.pair(x_next);
        per_kernel.push((gp.kernel().kind, frontier.distance(&query, opts)));
    }
    let min_distance = per_kernel.iter().map(|(_, v)| v.distance).fold(T::infinity(), T::min);
    Ok(DecisionClassification {
        per_kernel,
        min_distance,
        is_rational: min_distance < opts.threshold,
    })
}
