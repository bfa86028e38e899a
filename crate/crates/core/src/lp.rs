//! Strict feasibility of small polyhedral systems, via `microlp`.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};
use nalgebra::DVector;

/// `{g : <a_e, g> = b_e for equalities, <a_k, g> < b_k for strict rows}`.
#[derive(Debug, Clone, Default)]
pub(crate) struct PolySystem {
    pub equalities: Vec<(DVector<f64>, f64)>,
    pub strict: Vec<(DVector<f64>, f64)>,
}

const ZERO_ROW: f64 = 1e-12;

impl PolySystem {
    /// Largest common margin `s <= 1` such that every strict row holds with
    /// slack `s` (rows normalized to unit length). `None` when the equalities
    /// alone are infeasible.
    pub fn strict_margin(&self) -> Option<f64> {
        let Some(dim) = self
            .equalities
            .iter()
            .chain(&self.strict)
            .map(|(a, _)| a.len())
            .next()
        else {
            return Some(1.0);
        };
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = (0..dim)
            .map(|_| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
            .collect();
        let margin = problem.add_var(1.0, (f64::NEG_INFINITY, 1.0));
        let mut constant_margin = f64::INFINITY;
        for (a, b) in &self.equalities {
            let norm = a.norm();
            if norm <= ZERO_ROW {
                if b.abs() > ZERO_ROW {
                    return None;
                }
                continue;
            }
            let expr: Vec<_> = vars.iter().zip(a.iter()).map(|(v, c)| (*v, c / norm)).collect();
            problem.add_constraint(expr, ComparisonOp::Eq, b / norm);
        }
        for (a, b) in &self.strict {
            let norm = a.norm();
            if norm <= ZERO_ROW {
                // 0 < b must hold on its own
                constant_margin = constant_margin.min(*b);
                continue;
            }
            let mut expr: Vec<_> = vars.iter().zip(a.iter()).map(|(v, c)| (*v, c / norm)).collect();
            expr.push((margin, 1.0));
            problem.add_constraint(expr, ComparisonOp::Le, b / norm);
        }
        match problem.solve() {
            Ok(SolveOutcome::Solution(solution)) => Some(solution.objective().min(constant_margin)),
            _ => None,
        }
    }

    /// Whether the system has a point satisfying every strict row with `slack`.
    pub fn is_strictly_feasible(&self, slack: f64) -> bool {
        self.strict_margin().is_some_and(|m| m > slack)
    }
}
