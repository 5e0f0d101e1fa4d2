//! Per-iteration and windowed convergence measurements.

use crate::engine::EngineState;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dist_sq, norm_inf, pos};
use crate::oracle::exact_project_feasible;
use crate::problem::ProblemInstance;

/// One row of the metrics stream.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub t: usize,
    pub gamma: f64,
    /// `Phi(y(t))`
    pub phi_y: f64,
    /// `Phi(P_G(y(t)))` with the full feasible-set projection.
    pub phi_proj: f64,
    /// Squared distance from `y(t)` to the feasible set.
    pub dist_g_sq: f64,
    /// Disagreement `sum_i |e_i - mean(e)|^2`.
    pub a_t: f64,
    /// `|mean(e) - mean(g_i(y_i))|_inf`
    pub conservation_resid: f64,
    /// `max_k max(0, g_k(y(t)))`
    pub global_viol: f64,
    /// Largest soft-constraint violation over all agents.
    pub local_viol_max: f64,
    /// Largest `|q_i|^2 - 2 L^2 (1 + mu^2 K |e_i - mean(e)|^2)` over agents, when `L` is known.
    pub q_bound_excess: Option<f64>,
}

pub const CSV_HEADER: &str = "t,gamma,phi_y,phi_proj,dist_G_sq,a_t,lemma1_resid,global_viol,local_viol_max";

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t,
            self.gamma,
            self.phi_y,
            self.phi_proj,
            self.dist_g_sq,
            self.a_t,
            self.conservation_resid,
            self.global_viol,
            self.local_viol_max
        )
    }

    /// Inverse of [`MetricsRecord::csv_row`]; the bound excess is not stored.
    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Config(format!("expected 9 CSV fields, got {}", fields.len())));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| Error::Config(format!("bad number {:?} in column {i}", fields[i])))
        };
        Ok(Self {
            t: fields[0]
                .parse()
                .map_err(|_| Error::Config(format!("bad iteration {:?}", fields[0])))?,
            gamma: num(1)?,
            phi_y: num(2)?,
            phi_proj: num(3)?,
            dist_g_sq: num(4)?,
            a_t: num(5)?,
            conservation_resid: num(6)?,
            global_viol: num(7)?,
            local_viol_max: num(8)?,
            q_bound_excess: None,
        })
    }
}

pub fn mean_vector(vs: &[Vec<f64>]) -> Vec<f64> {
    let Some(first) = vs.first() else {
        return Vec::new();
    };
    let mut m = vec![0.0; first.len()];
    for v in vs {
        axpy(1.0, v, &mut m);
    }
    let n = vs.len() as f64;
    m.iter_mut().for_each(|x| *x /= n);
    m
}

/// `sum_i |e_i - mean(e)|^2`; zero for an empty list.
pub fn disagreement(e: &[Vec<f64>]) -> f64 {
    let m = mean_vector(e);
    e.iter().map(|ei| dist_sq(ei, &m)).sum()
}

/// `|mean(e) - mean(g)|_inf`
pub fn conservation_residual(e: &[Vec<f64>], g: &[Vec<f64>]) -> f64 {
    let me = mean_vector(e);
    let mg = mean_vector(g);
    me.iter().zip(&mg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Scale used by the conservation tolerance: `1 + max_i |g_i|_inf`.
pub fn conservation_scale(g: &[Vec<f64>]) -> f64 {
    1.0 + g.iter().map(|gi| norm_inf(gi)).fold(0.0, f64::max)
}

/// Running weighted sums for the averages over a window `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicAccumulator {
    pub start: usize,
    pub end: Option<usize>,
    sum_y: Vec<f64>,
    sum_x: Vec<f64>,
    weight: f64,
    count: usize,
}

impl ErgodicAccumulator {
    pub fn new(start: usize, dim: usize) -> Self {
        Self {
            start,
            end: None,
            sum_y: vec![0.0; dim],
            sum_x: vec![0.0; dim],
            weight: 0.0,
            count: 0,
        }
    }

    /// Adds `gamma * y` and `gamma * x`, where `x` is the feasible projection of `y`.
    pub fn push(&mut self, t: usize, gamma: f64, y: &[f64], x: &[f64]) {
        axpy(gamma, y, &mut self.sum_y);
        axpy(gamma, x, &mut self.sum_x);
        self.weight += gamma;
        self.count += 1;
        self.end = Some(t);
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Mean step size over the window.
    pub fn mean_gamma(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.weight / self.count as f64
        }
    }
}

/// `(y_tilde, x_tilde)`: the step-weighted averages of `y(k)` and `P_G(y(k))`.
pub fn ergodic_points(acc: &ErgodicAccumulator) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(acc.weight > 0.0) {
        return Err(Error::EmptyWindow(format!(
            "window starting at {} has zero total step weight",
            acc.start
        )));
    }
    let y = acc.sum_y.iter().map(|v| v / acc.weight).collect();
    let x = acc.sum_x.iter().map(|v| v / acc.weight).collect();
    Ok((y, x))
}

/// `Phi(x_tilde) - phi_star + rho_proxy / gamma_bar * |y_tilde - x_tilde|^2`
pub fn ergodic_gap(
    p: &ProblemInstance,
    acc: &ErgodicAccumulator,
    phi_star: f64,
    gamma_bar: f64,
    rho_proxy: f64,
) -> Result<f64> {
    let (y, x) = ergodic_points(acc)?;
    let mut gap = p.penalty_objective(&x)? - phi_star;
    if rho_proxy != 0.0 {
        gap += rho_proxy / gamma_bar * dist_sq(&y, &x);
    }
    Ok(gap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    pub used: usize,
    /// Samples dropped because `t` or the value was not positive.
    pub excluded: usize,
}

/// Least-squares slope of `ln(value)` against `ln(t)`.
pub fn decay_fit(series: &[(f64, f64)]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, v)| *t > 0.0 && *v > 0.0 && v.is_finite())
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    let (slope, intercept) = least_squares(&pts)?;
    Ok(DecayFit {
        exponent: slope,
        intercept,
        used: pts.len(),
        excluded: series.len() - pts.len(),
    })
}

/// Least-squares slope of `ln(value)` against `t`: the per-step log-contraction
/// of a geometrically decaying series.
pub fn contraction_fit(series: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    Ok(least_squares(&pts)?.0)
}

fn least_squares(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pts.len() < 3 {
        return Err(Error::Config(format!(
            "a fit needs at least 3 positive samples, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Projects every block onto its full local feasible set.
pub fn project_feasible(p: &ProblemInstance, state: &EngineState, tol: f64) -> Result<Vec<Vec<f64>>> {
    p.agents()
        .iter()
        .zip(&state.agents)
        .map(|(a, s)| exact_project_feasible(a, &s.y, tol))
        .collect()
}

/// Metrics of `state` together with `P_G(y(t))` as stacked vectors.
pub struct Snapshot {
    pub record: MetricsRecord,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

pub fn snapshot(p: &ProblemInstance, state: &EngineState, gamma: f64, tol: f64) -> Result<Snapshot> {
    let blocks = state.y_blocks();
    let proj = project_feasible(p, state, tol)?;
    let dist_g_sq = blocks.iter().zip(&proj).map(|(y, x)| dist_sq(y, x)).sum();
    let e = state.estimates();
    let g: Vec<Vec<f64>> = state.agents.iter().map(|a| a.g_cached.clone()).collect();
    let global = p.global_constraint_blocks(&blocks)?;
    let local_viol_max = p
        .agents()
        .iter()
        .zip(&blocks)
        .map(|(a, y)| a.soft_set().max_violation(y))
        .fold(0.0, f64::max);
    let record = MetricsRecord {
        t: state.t,
        gamma,
        phi_y: p.penalty_objective_blocks(&blocks)?,
        phi_proj: p.penalty_objective_blocks(&proj)?,
        dist_g_sq,
        a_t: disagreement(&e),
        conservation_resid: conservation_residual(&e, &g),
        global_viol: global.iter().map(|v| pos(*v)).fold(0.0, f64::max),
        local_viol_max,
        q_bound_excess: None,
    };
    Ok(Snapshot {
        record,
        y: p.stack(&blocks),
        x: p.stack(&proj),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn disagreement_examples() {
        assert_eq!(disagreement(&[vec![2.0], vec![2.0]]), 0.0);
        assert_eq!(disagreement(&[vec![1.0], vec![3.0]]), 2.0);
        let e = vec![vec![1.0, -2.0], vec![0.5, 4.0], vec![3.0, 0.0]];
        let scaled: Vec<Vec<f64>> = e.iter().map(|v| v.iter().map(|x| 3.0 * x).collect()).collect();
        assert!((disagreement(&scaled) - 9.0 * disagreement(&e)).abs() < 1e-12);
    }

    #[test]
    fn ergodic_examples() {
        let mut acc = ErgodicAccumulator::new(0, 1);
        for (t, y) in [0.0, 1.0, 2.0].iter().enumerate() {
            acc.push(t, 0.5, &[*y], &[*y]);
        }
        assert_eq!(ergodic_points(&acc).unwrap().0, vec![1.0]);

        let mut acc = ErgodicAccumulator::new(0, 1);
        acc.push(0, 1.0, &[0.0], &[0.0]);
        acc.push(1, 3.0, &[4.0], &[4.0]);
        assert_eq!(ergodic_points(&acc).unwrap().0, vec![3.0]);

        let mut acc = ErgodicAccumulator::new(5, 2);
        acc.push(5, 0.1, &[1.5, -2.0], &[1.0, -2.0]);
        let (y, x) = ergodic_points(&acc).unwrap();
        assert!((y[0] - 1.5).abs() < 1e-15 && (x[0] - 1.0).abs() < 1e-15);

        let empty = ErgodicAccumulator::new(0, 1);
        assert!(matches!(ergodic_points(&empty), Err(Error::EmptyWindow(_))));
    }

    #[test]
    fn decay_fit_examples() {
        let ts = [1.0, 10.0, 100.0, 1000.0, 1e4];
        let sqrt: Vec<_> = ts.iter().map(|t| (*t, 1.0 / f64::sqrt(*t))).collect();
        assert!((decay_fit(&sqrt).unwrap().exponent + 0.5).abs() < 1e-9);
        let flat: Vec<_> = ts.iter().map(|t| (*t, 4.2)).collect();
        assert!(decay_fit(&flat).unwrap().exponent.abs() < 1e-12);
        let inv: Vec<_> = ts.iter().map(|t| (*t, 3.0 / t)).collect();
        assert!((decay_fit(&inv).unwrap().exponent + 1.0).abs() < 1e-9);

        let mut with_zero = sqrt.clone();
        with_zero.push((5.0, 0.0));
        let fit = decay_fit(&with_zero).unwrap();
        assert_eq!((fit.used, fit.excluded), (5, 1));
        assert!(decay_fit(&sqrt[..2]).is_err());
    }

    #[test]
    fn contraction_fit_geometric() {
        let s: Vec<_> = (0..50).map(|t| (t as f64, 2.0 * 0.9f64.powi(t))).collect();
        assert!((contraction_fit(&s).unwrap() - 0.9f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let r = MetricsRecord {
            t: 17,
            gamma: 0.1 + 0.2,
            phi_y: std::f64::consts::PI,
            phi_proj: 1e-300,
            dist_g_sq: 0.0,
            a_t: 123456.789,
            conservation_resid: 5e-17,
            global_viol: 2.0 / 3.0,
            local_viol_max: f64::MIN_POSITIVE,
            q_bound_excess: None,
        };
        assert_eq!(MetricsRecord::parse_csv_row(&r.csv_row()).unwrap(), r);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn disagreement_zero_iff_equal(v in prop::collection::vec(-10.0f64..10.0, 1..4), n in 1usize..6, bump in 1e-3f64..1.0) {
            let same = vec![v.clone(); n];
            prop_assert!(disagreement(&same) <= 1e-12);
            if n > 1 {
                let mut diff = same.clone();
                diff[0][0] += bump;
                prop_assert!(disagreement(&diff) > 1e-12);
            }
        }

        #[test]
        fn ergodic_points_are_convex_and_order_free(
            pts in prop::collection::vec((0.01f64..2.0, -5.0f64..5.0), 1..20),
        ) {
            let mut fwd = ErgodicAccumulator::new(0, 1);
            let mut rev = ErgodicAccumulator::new(0, 1);
            for (t, (g, y)) in pts.iter().enumerate() {
                fwd.push(t, *g, &[*y], &[*y]);
            }
            for (t, (g, y)) in pts.iter().rev().enumerate() {
                rev.push(t, *g, &[*y], &[*y]);
            }
            let a = ergodic_points(&fwd).unwrap().0[0];
            let b = ergodic_points(&rev).unwrap().0[0];
            let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(a >= lo - 1e-12 && a <= hi + 1e-12);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}
