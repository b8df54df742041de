use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::FlatMetricProblem;
use crate::error::{Error, Result};

pub const ORACLE_MAX_POINTS: usize = 15;

/// Solves the primal LP over all pairwise Lipschitz constraints with a
/// dense simplex. Meant for cross-checking the flow solver on tiny inputs.
pub fn lp_oracle(problem: &FlatMetricProblem, localized: bool) -> Result<f64> {
    let m = problem.len();
    if m > ORACLE_MAX_POINTS {
        return Err(Error::OracleTooLarge { size: m, cap: ORACLE_MAX_POINTS });
    }
    if localized && problem.localization.is_none() {
        return Err(Error::Argument("localized distance needs a ball".into()));
    }
    let (space, mass) = problem.space();
    let rho = problem.bounds(&space, localized);
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let f: Vec<_> = (0..m).map(|i| lp.add_var(mass[i], (-rho[i], rho[i]))).collect();
    for i in 0..m {
        for j in i + 1..m {
            let d = space.distance(i, j);
            lp.add_constraint([(f[i], 1.0), (f[j], -1.0)], ComparisonOp::Le, d);
            lp.add_constraint([(f[j], 1.0), (f[i], -1.0)], ComparisonOp::Le, d);
        }
    }
    let sol = lp.solve().map_err(|e| Error::Solver(e.to_string()))?;
    Ok(sol.objective().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DiscreteMeasure;

    #[test]
    fn matches_closed_forms() {
        let a = DiscreteMeasure::new(1, vec![0.0], vec![1.0]).unwrap();
        let b = DiscreteMeasure::new(1, vec![0.3], vec![1.0]).unwrap();
        let p = FlatMetricProblem::measures(a, b).unwrap();
        assert!((lp_oracle(&p, false).unwrap() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn size_limit() {
        let a = DiscreteMeasure::empirical(1, (0..16).map(f64::from).collect()).unwrap();
        let p = FlatMetricProblem::measures(a, DiscreteMeasure::empty(1)).unwrap();
        assert!(matches!(lp_oracle(&p, false), Err(Error::OracleTooLarge { .. })));
    }
}
