//! Derivative-free local refinement: Nelder-Mead reflection steps clipped to
//! the search box, maximizing orientation.
//!
//! `-inf` criterion values participate only in comparisons (a vertex outside
//! the feasible region is simply the worst vertex), never in coordinate
//! arithmetic, so parameter-dependent support boundaries do not distort the
//! search the way large-negative surrogates would.

use super::{BoxDomain, Criterion, EstimError, FitConfig};

pub(crate) struct LocalResult {
    pub evals: usize,
    /// Points that improved on the start value, in evaluation order; the
    /// caller folds these into its global incumbent.
    pub improvements: Vec<(Vec<f64>, f64)>,
}

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

pub(crate) fn refine(
    crit: &Criterion,
    domain: &BoxDomain,
    start: &[f64],
    start_value: f64,
    cfg: &FitConfig,
) -> Result<LocalResult, EstimError> {
    let dim = domain.dim();
    let mut evals = 0usize;
    let mut improvements: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut best_seen = start_value;

    let eval = |eta: &[f64],
                evals: &mut usize,
                best_seen: &mut f64,
                improvements: &mut Vec<(Vec<f64>, f64)>|
     -> Result<f64, EstimError> {
        let v = crit.value(eta)?;
        *evals += 1;
        if v > *best_seen {
            *best_seen = v;
            improvements.push((eta.to_vec(), v));
        }
        Ok(v)
    };

    // Initial simplex: perturb each coordinate by a fixed fraction of the box
    // span, flipped inward when the step would leave the box.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), start_value));
    for j in 0..dim {
        let mut v = start.to_vec();
        let step = cfg.simplex_scale * domain.span(j);
        v[j] = if v[j] + step <= domain.upper(j) {
            v[j] + step
        } else {
            v[j] - step
        };
        domain.clip(&mut v);
        let value = eval(&v, &mut evals, &mut best_seen, &mut improvements)?;
        simplex.push((v, value));
    }

    for _ in 0..cfg.max_iters {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0_f64, f64::max)
            })
            .fold(0.0_f64, f64::max);
        if diameter < cfg.simplex_tol {
            break;
        }

        let worst = simplex.len() - 1;
        let mut centroid = vec![0.0; dim];
        for (v, _) in &simplex[..worst] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= worst as f64;
        }

        let towards = |from: &[f64], scale: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + scale * (c - w))
                .collect();
            domain.clip(&mut p);
            p
        };

        let reflected = towards(&simplex[worst].0, ALPHA);
        let f_r = eval(&reflected, &mut evals, &mut best_seen, &mut improvements)?;

        if f_r > simplex[0].1 {
            let expanded = towards(&simplex[worst].0, GAMMA);
            let f_e = eval(&expanded, &mut evals, &mut best_seen, &mut improvements)?;
            simplex[worst] = if f_e > f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
        } else if f_r > simplex[worst - 1].1 {
            simplex[worst] = (reflected, f_r);
        } else {
            // Contract toward the centroid, outside or inside depending on
            // whether the reflection beat the worst vertex.
            let scale = if f_r > simplex[worst].1 {
                RHO * ALPHA
            } else {
                -RHO
            };
            let contracted = towards(&simplex[worst].0, scale);
            let f_c = eval(&contracted, &mut evals, &mut best_seen, &mut improvements)?;
            if f_c > f_r.max(simplex[worst].1) {
                simplex[worst] = (contracted, f_c);
            } else {
                // Shrink every non-best vertex toward the best one.
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let mut v: Vec<f64> = best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, x)| b + SIGMA * (x - b))
                        .collect();
                    domain.clip(&mut v);
                    let value = eval(&v, &mut evals, &mut best_seen, &mut improvements)?;
                    *vertex = (v, value);
                }
            }
        }
    }

    Ok(LocalResult {
        evals,
        improvements,
    })
}
