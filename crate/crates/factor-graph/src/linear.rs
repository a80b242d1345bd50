use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::{FactorGraph, GraphError, GraphEstimate, Result, VariableKey};

/// Systems with fewer variables than this are solved densely.
pub const DENSE_VARIABLE_LIMIT: usize = 200;

/// A Cholesky pivot smaller than this fraction of its diagonal entry marks a
/// direction the factors do not constrain.
const PIVOT_TOLERANCE: f64 = 1e-10;

/// Column layout of the stacked tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ordering {
    keys: Vec<VariableKey>,
    offsets: Vec<usize>,
    dim: usize,
}

impl Ordering {
    /// `keys` must be sorted and unique.
    pub fn new(keys: Vec<VariableKey>) -> Self {
        let mut offsets = Vec::with_capacity(keys.len());
        let mut dim = 0;
        for k in &keys {
            offsets.push(dim);
            dim += k.dim();
        }
        Self { keys, offsets, dim }
    }

    pub fn keys(&self) -> &[VariableKey] {
        &self.keys
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offset(&self, key: &VariableKey) -> Option<usize> {
        self.keys.binary_search(key).ok().map(|i| self.offsets[i])
    }

    /// Block containing scalar column `col`.
    pub fn block_of(&self, col: usize) -> usize {
        self.offsets.partition_point(|&o| o <= col) - 1
    }
}

/// Gauss-Newton system `H·δ = b` with `H = Σ JᵀΣ⁻¹J`, `b = −Σ JᵀΣ⁻¹r`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub ordering: Ordering,
    pub h: CscMatrix<f64>,
    pub b: DVector<f64>,
    pub cost: f64,
}

impl LinearSystem {
    pub fn dense_h(&self) -> DMatrix<f64> {
        DMatrix::from(&self.h)
    }

    /// `vᵀ·H·v`.
    pub fn quadratic_form(&self, v: &DVector<f64>) -> f64 {
        self.h.triplet_iter().map(|(i, j, h)| v[i] * h * v[j]).sum()
    }
}

/// Assemble the normal equations at `estimate`. Variables are the keys
/// referenced by factors, ordered by key.
pub fn linearize(graph: &FactorGraph, estimate: &GraphEstimate) -> Result<LinearSystem> {
    if graph.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let ordering = Ordering::new(graph.keys());
    let n = ordering.dim();
    let mut coo = CooMatrix::new(n, n);
    let mut b = DVector::zeros(n);
    let mut cost = 0.0;
    for factor in graph.factors() {
        let lin = factor.linearize(estimate)?;
        cost += lin.cost;
        for (ka, ja) in &lin.blocks {
            let oa = ordering.offset(ka).expect("factor key in ordering");
            let mut rows = b.rows_mut(oa, ja.ncols());
            rows -= ja.transpose() * &lin.residual;
            for (kb, jb) in &lin.blocks {
                let ob = ordering.offset(kb).expect("factor key in ordering");
                let block = ja.transpose() * jb;
                for c in 0..block.ncols() {
                    for r in 0..block.nrows() {
                        coo.push(oa + r, ob + c, block[(r, c)]);
                    }
                }
            }
        }
    }
    Ok(LinearSystem {
        ordering,
        h: CscMatrix::from(&coo),
        b,
        cost,
    })
}

/// Solve `H·δ = b`, densely for small systems and by sparse Cholesky under a
/// minimum-degree block ordering otherwise.
pub fn solve_normal_equations(system: &LinearSystem) -> Result<DVector<f64>> {
    if system.ordering.keys().len() < DENSE_VARIABLE_LIMIT {
        solve_dense(system)
    } else {
        solve_sparse(system)
    }
}

pub(crate) fn solve_dense(system: &LinearSystem) -> Result<DVector<f64>> {
    let h = system.dense_h();
    let l = cholesky_with_pivot_check(&h).map_err(|cols| rank_error(system, &cols))?;
    let y = l
        .solve_lower_triangular(&system.b)
        .expect("positive pivots");
    Ok(l.transpose()
        .solve_upper_triangular(&y)
        .expect("positive pivots"))
}

pub(crate) fn solve_sparse(system: &LinearSystem) -> Result<DVector<f64>> {
    let ordering = &system.ordering;
    let n = ordering.dim();
    let blocks = ordering.keys().len();
    let mut adjacency = vec![BTreeSet::new(); blocks];
    for (i, j, _) in system.h.triplet_iter() {
        let (bi, bj) = (ordering.block_of(i), ordering.block_of(j));
        if bi != bj {
            adjacency[bi].insert(bj);
        }
    }
    let block_order = minimum_degree(adjacency);

    // new_of_old maps scalar columns into the permuted layout.
    let mut new_of_old = vec![0; n];
    let mut next = 0;
    for &blk in &block_order {
        let start = ordering.offsets[blk];
        for k in 0..ordering.keys()[blk].dim() {
            new_of_old[start + k] = next;
            next += 1;
        }
    }
    let mut coo = CooMatrix::new(n, n);
    let mut diag = vec![0.0; n];
    for (i, j, v) in system.h.triplet_iter() {
        coo.push(new_of_old[i], new_of_old[j], *v);
        if i == j {
            diag[new_of_old[i]] += *v;
        }
    }
    let permuted = CscMatrix::from(&coo);
    let Ok(chol) = CscCholesky::factor(&permuted) else {
        return solve_dense(system);
    };
    let deficient: Vec<usize> = chol
        .l()
        .triplet_iter()
        .filter(|(i, j, l)| i == j && !(**l * **l > PIVOT_TOLERANCE * diag[*i].abs()))
        .map(|(i, _, _)| i)
        .collect();
    if !deficient.is_empty() {
        let mut old_of_new = vec![0; n];
        for (old, &new) in new_of_old.iter().enumerate() {
            old_of_new[new] = old;
        }
        let cols: Vec<usize> = deficient.iter().map(|&c| old_of_new[c]).collect();
        return Err(rank_error(system, &cols));
    }
    let mut b = DVector::zeros(n);
    for (old, &new) in new_of_old.iter().enumerate() {
        b[new] = system.b[old];
    }
    let x = chol.solve(&b);
    Ok(DVector::from_fn(n, |old, _| x[(new_of_old[old], 0)]))
}

fn rank_error(system: &LinearSystem, cols: &[usize]) -> GraphError {
    let set: BTreeSet<VariableKey> = cols
        .iter()
        .map(|&c| system.ordering.keys()[system.ordering.block_of(c)])
        .collect();
    GraphError::RankDeficient {
        blocks: set.into_iter().collect(),
    }
}

/// Lower Cholesky factor of `h`, or the columns whose pivots vanish.
fn cholesky_with_pivot_check(h: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, Vec<usize>> {
    let n = h.nrows();
    let mut l = DMatrix::zeros(n, n);
    let mut deficient = Vec::new();
    for j in 0..n {
        let mut d = h[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > PIVOT_TOLERANCE * h[(j, j)].abs()) || d <= 0.0 {
            // Pin the column and keep going so every deficient pivot is found.
            deficient.push(j);
            l[(j, j)] = 1.0;
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    if deficient.is_empty() {
        Ok(l)
    } else {
        Err(deficient)
    }
}

/// Greedy minimum-degree elimination order; ties go to the lowest index.
fn minimum_degree(mut adjacency: Vec<BTreeSet<usize>>) -> Vec<usize> {
    let n = adjacency.len();
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&i| !eliminated[i])
            .min_by_key(|&i| (adjacency[i].len(), i))
            .expect("uneliminated vertex");
        eliminated[v] = true;
        order.push(v);
        let neighbours: Vec<usize> = std::mem::take(&mut adjacency[v]).into_iter().collect();
        for &a in &neighbours {
            adjacency[a].remove(&v);
            for &b in &neighbours {
                if a != b {
                    adjacency[a].insert(b);
                }
            }
        }
    }
    order
}
