//! Choice of the retained GDS range per mode by maximizing the n-mode Fisher
//! score of the projected training subspaces.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fisher::{fisher_mode, nmode_fisher, FisherReport, FisherStatus, NModeFisher, FISHER_ZERO_TOL};
use crate::gds::{gds_from_gram, project_onto_gds, GdsBasis, ModeGram};
use crate::subspace::Subspace;

use super::config::{PipelineConfig, SearchStrategy};
use super::group_by_class;

/// Upper bound on combinations visited by the exhaustive strategy.
pub const EXHAUSTIVE_LIMIT: usize = 1_000_000;

/// One evaluated candidate; `score` is `None` when the candidate was
/// infeasible (projection collapse or indeterminate Fisher terms).
#[derive(Debug, Clone, PartialEq)]
pub struct SearchStep {
    pub round: usize,
    /// Position (within the selected modes) that was being swept.
    pub mode_pos: usize,
    pub ranges: Vec<(usize, usize)>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GdsSelection {
    /// `(alpha, beta)` per selected mode, 1-based inclusive.
    pub ranges: Vec<(usize, usize)>,
    pub bases: Vec<GdsBasis>,
    /// Projected training subspaces per mode, in sample order.
    pub projected: Vec<Vec<Subspace>>,
    pub fisher: NModeFisher,
    pub trace: Vec<SearchStep>,
}

/// Per-mode cache of Fisher reports keyed by `(alpha, beta)`.
struct Evaluator<'a> {
    eigen: Vec<GdsBasis>,
    parts: &'a [Vec<Subspace>],
    labels: &'a [usize],
    class_count: usize,
    config: &'a PipelineConfig,
    cache: Vec<HashMap<(usize, usize), Option<FisherReport>>>,
}

impl Evaluator<'_> {
    fn project_mode(&self, pos: usize, range: (usize, usize)) -> Result<Option<(GdsBasis, Vec<Subspace>)>> {
        let gds = self.eigen[pos].with_range(range.0, Some(range.1))?;
        let expected_dim = |s: &Subspace| s.dim().min(gds.width());
        let mut out = Vec::with_capacity(self.parts[pos].len());
        for s in &self.parts[pos] {
            match project_onto_gds(&gds, s, self.config.projection_tol) {
                Ok(p) if p.dim() == expected_dim(s) => out.push(p),
                Ok(_) | Err(Error::ProjectionCollapse(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        if out.iter().any(|p| p.dim() != out[0].dim()) {
            return Ok(None);
        }
        Ok(Some((gds, out)))
    }

    fn report(&mut self, pos: usize, range: (usize, usize)) -> Result<Option<FisherReport>> {
        if let Some(r) = self.cache[pos].get(&range) {
            return Ok(*r);
        }
        let report = match self.project_mode(pos, range)? {
            None => None,
            Some((_, projected)) => {
                let by_class = group_by_class(&projected, self.labels, self.class_count);
                let r = fisher_mode(pos, &by_class, self.config.karcher)?;
                (r.status != FisherStatus::Indeterminate).then_some(r)
            }
        };
        self.cache[pos].insert(range, report);
        Ok(report)
    }

    fn score(&mut self, ranges: &[(usize, usize)]) -> Result<Option<NModeFisher>> {
        let mut reports = Vec::with_capacity(ranges.len());
        for (pos, &range) in ranges.iter().enumerate() {
            match self.report(pos, range)? {
                Some(r) => reports.push(r),
                None => return Ok(None),
            }
        }
        let f = nmode_fisher(&reports)?;
        Ok((f.status != FisherStatus::Indeterminate).then_some(f))
    }

    fn candidates(&self, pos: usize) -> Vec<(usize, usize)> {
        let rank = self.eigen[pos].rank;
        let alpha_max = self.config.gds_alpha_max.unwrap_or(rank).min(rank);
        let mut out = Vec::new();
        for a in 1..=alpha_max {
            if self.config.gds_beta_search {
                out.extend((a..=rank).map(|b| (a, b)));
            } else {
                out.push((a, rank));
            }
        }
        out
    }
}

/// Picks `(alpha, beta)` per mode maximizing the n-mode Fisher score of the
/// projected training subspaces.
///
/// `parts[pos][sample]` holds the raw subspace of each training sample in the
/// `pos`-th selected mode; `grams[pos]` the matching mode Gram matrix.
/// Coordinate search sweeps one mode at a time for `config.search_rounds`
/// rounds starting from `alpha = 1`; ties keep the smallest alpha.
pub fn optimize_gds_dims(
    grams: &[ModeGram],
    parts: &[Vec<Subspace>],
    labels: &[usize],
    class_count: usize,
    config: &PipelineConfig,
) -> Result<GdsSelection> {
    if class_count < 2 {
        return Err(Error::Degenerate("GDS search needs at least 2 classes".into()));
    }
    if grams.len() != parts.len() || grams.is_empty() {
        return Err(Error::Shape(format!(
            "{} Gram matrices for {} modes",
            grams.len(),
            parts.len()
        )));
    }
    let eigen = grams
        .iter()
        .map(|g| gds_from_gram(g, 1, None))
        .collect::<Result<Vec<_>>>()?;
    let mut ev = Evaluator {
        eigen,
        parts,
        labels,
        class_count,
        config,
        cache: vec![HashMap::new(); grams.len()],
    };
    let n = grams.len();
    let candidates: Vec<Vec<(usize, usize)>> = (0..n).map(|p| ev.candidates(p)).collect();
    let mut trace = Vec::new();

    let better = |s: f64, best: Option<f64>| best.is_none_or(|b| s > b);

    let ranges = match config.gds_search {
        SearchStrategy::Coordinate => {
            let mut current: Vec<(usize, usize)> = (0..n).map(|p| (1, ev.eigen[p].rank)).collect();
            for round in 0..config.search_rounds {
                for pos in 0..n {
                    let mut best: Option<(f64, (usize, usize))> = None;
                    for &cand in &candidates[pos] {
                        let mut trial = current.clone();
                        trial[pos] = cand;
                        let score = ev.score(&trial)?.map(|f| f.score);
                        trace.push(SearchStep {
                            round,
                            mode_pos: pos,
                            ranges: trial,
                            score,
                        });
                        if let Some(s) = score {
                            if better(s, best.map(|b| b.0)) {
                                best = Some((s, cand));
                            }
                        }
                    }
                    if let Some((_, cand)) = best {
                        current[pos] = cand;
                    }
                }
            }
            current
        }
        SearchStrategy::Exhaustive => {
            let total = candidates
                .iter()
                .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
                .filter(|&t| t <= EXHAUSTIVE_LIMIT)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "exhaustive GDS search exceeds {EXHAUSTIVE_LIMIT} combinations; lower alpha_max"
                    ))
                })?;
            let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
            let mut idx = vec![0usize; n];
            for _ in 0..total {
                let trial: Vec<(usize, usize)> = (0..n).map(|p| candidates[p][idx[p]]).collect();
                let score = ev.score(&trial)?.map(|f| f.score);
                trace.push(SearchStep {
                    round: 0,
                    mode_pos: 0,
                    ranges: trial.clone(),
                    score,
                });
                if let Some(s) = score {
                    if better(s, best.as_ref().map(|b| b.0)) {
                        best = Some((s, trial));
                    }
                }
                // lexicographic odometer, last mode fastest
                for p in (0..n).rev() {
                    idx[p] += 1;
                    if idx[p] < candidates[p].len() {
                        break;
                    }
                    idx[p] = 0;
                }
            }
            best.map(|b| b.1).ok_or_else(|| {
                Error::DegenerateFisher("no feasible GDS range in the exhaustive search".into())
            })?
        }
    };

    let fisher = ev.score(&ranges)?.ok_or_else(|| {
        Error::DegenerateFisher(format!(
            "no GDS range yields a usable Fisher score (selected {ranges:?})"
        ))
    })?;
    if !(fisher.between > FISHER_ZERO_TOL) {
        return Err(Error::DegenerateFisher(format!(
            "classes are not separable in any GDS range (between-class variability {:.3e})",
            fisher.between
        )));
    }
    let mut bases = Vec::with_capacity(n);
    let mut projected = Vec::with_capacity(n);
    for (pos, &range) in ranges.iter().enumerate() {
        let (gds, proj) = ev
            .project_mode(pos, range)?
            .ok_or_else(|| Error::ProjectionCollapse(format!("selected range {range:?} collapses mode {pos}")))?;
        bases.push(GdsBasis { mode: grams[pos].mode, ..gds });
        projected.push(proj);
    }
    Ok(GdsSelection {
        ranges,
        bases,
        projected,
        fisher,
        trace,
    })
}
