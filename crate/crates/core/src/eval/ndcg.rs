use serde::{Deserialize, Serialize};

use crate::corpus::Grade;
use crate::error::{Error, Result};

/// Graded relevance of each self-reported label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub expert: f64,
    pub intermediate: f64,
    pub non_expert: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            expert: 10.0,
            intermediate: 2.0,
            non_expert: 0.0,
        }
    }
}

impl Gains {
    pub fn gain(&self, grade: Grade) -> f64 {
        match grade {
            Grade::Expert => self.expert,
            Grade::Intermediate => self.intermediate,
            Grade::NonExpert => self.non_expert,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.expert >= self.intermediate
            && self.intermediate >= self.non_expert
            && self.non_expert >= 0.0;
        if !ok {
            return Err(Error::Config(
                "gains must be nonnegative and nonincreasing from Expert to NonExpert".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ndcg {
    pub value: f64,
    /// Set when no item carries any gain (IDCG = 0); `value` is then 0.
    pub degenerate: bool,
}

/// `Σ gain_j / log2(j + 1)` over 1-based positions.
pub fn dcg(gains: &[f64]) -> f64 {
    gains
        .iter()
        .enumerate()
        .map(|(i, g)| g / ((i + 2) as f64).log2())
        .sum()
}

/// NDCG over the full list of grades, given in the method's score order.
pub fn ndcg_at_k(ordered_grades: &[Grade], gains: &Gains) -> Ndcg {
    let observed: Vec<f64> = ordered_grades.iter().map(|&g| gains.gain(g)).collect();
    let mut ideal = observed.clone();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg(&ideal);
    if idcg == 0.0 {
        return Ndcg {
            value: 0.0,
            degenerate: true,
        };
    }
    Ndcg {
        value: dcg(&observed) / idcg,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Grade::*;

    #[test]
    fn ideal_order_is_one() {
        let n = ndcg_at_k(&[Expert, Expert, Intermediate, NonExpert], &Gains::default());
        assert_eq!(n.value, 1.0);
        assert!(!n.degenerate);
    }

    #[test]
    fn two_item_case() {
        let n = ndcg_at_k(&[NonExpert, Expert], &Gains::default());
        assert!((n.value - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert!((n.value - 0.6309).abs() < 1e-4);
    }

    #[test]
    fn all_non_expert_is_flagged_zero() {
        let n = ndcg_at_k(&[NonExpert; 10], &Gains::default());
        assert_eq!(n, Ndcg { value: 0.0, degenerate: true });
    }

    #[test]
    fn increasing_gains_rejected() {
        let g = Gains { expert: 1.0, intermediate: 2.0, non_expert: 0.0 };
        assert!(g.validate().is_err());
        assert!(Gains::default().validate().is_ok());
    }
}
