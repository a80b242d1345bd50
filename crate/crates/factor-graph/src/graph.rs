use std::collections::BTreeSet;

use crate::{Factor, GraphEstimate, Result, VariableKey};

/// A set of factors over pose and quadric variables.
#[derive(Debug, Clone, Default)]
pub struct FactorGraph {
    factors: Vec<Factor>,
}

impl FactorGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, factor: Factor) {
        self.factors.push(factor);
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Keys referenced by at least one factor, in layout order.
    pub fn keys(&self) -> Vec<VariableKey> {
        let set: BTreeSet<VariableKey> = self.factors.iter().flat_map(Factor::keys).collect();
        set.into_iter().collect()
    }

    /// Total cost `Σ ½·ρ(rᵀΣ⁻¹r)`.
    pub fn cost(&self, estimate: &GraphEstimate) -> Result<f64> {
        self.factors.iter().map(|f| f.cost(estimate)).sum()
    }
}
