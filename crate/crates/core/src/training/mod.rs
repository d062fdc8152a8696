//! Weight construction for the stored patterns and the partition of a pattern
//! corpus across a bank of independent networks.
//!
//! Three rules are available:
//!
//! * [`Rule::Hebbian`]: `W = sum_p xi_p xi_p^T`, diagonal zeroed. No
//!   normalization; sign dynamics and the within-bank comparison of energy
//!   statistics are unaffected by a uniform positive scale.
//! * [`Rule::Pseudoinverse`]: zero the Hebbian diagonal, take the
//!   Moore-Penrose pseudo-inverse of the result, zero the diagonal again.
//! * [`Rule::Projection`]: the classical projection rule
//!   `W = X (X^T X)^-1 X^T` with the diagonal zeroed, kept as a comparator.

mod pinv;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rayon::prelude::*;

pub use pinv::{moore_penrose_pinv, DEFAULT_RTOL};

use crate::error::{Error, Result};
use crate::seed;
use crate::types::{BipolarState, Geometry, NetworkBank, WeightMatrix};

/// Patterns to store, each with a unique identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    ids: Vec<String>,
    patterns: Vec<BipolarState>,
}

impl TrainingSet {
    pub fn new(ids: Vec<String>, patterns: Vec<BipolarState>) -> Result<Self> {
        if ids.len() != patterns.len() {
            return Err(Error::Input(format!(
                "{} ids for {} patterns",
                ids.len(),
                patterns.len()
            )));
        }
        if let Some(first) = patterns.first() {
            let n = first.len();
            if let Some((i, p)) = patterns.iter().enumerate().find(|(_, p)| p.len() != n) {
                return Err(Error::Dimension(format!(
                    "pattern {i} has length {}, expected {n}",
                    p.len()
                )));
            }
        }
        let mut seen = HashSet::with_capacity(ids.len());
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::Input(format!("duplicate pattern id {dup:?}")));
        }
        Ok(TrainingSet { ids, patterns })
    }

    /// Patterns named `p0`, `p1`, ... in order.
    pub fn from_patterns(patterns: Vec<BipolarState>) -> Result<Self> {
        let ids = (0..patterns.len()).map(|i| format!("p{i}")).collect();
        Self::new(ids, patterns)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Node count, or 0 for an empty set.
    pub fn n(&self) -> usize {
        self.patterns.first().map_or(0, BipolarState::len)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn patterns(&self) -> &[BipolarState] {
        &self.patterns
    }

    pub fn get(&self, id: &str) -> Option<&BipolarState> {
        self.ids
            .iter()
            .position(|x| x == id)
            .map(|i| &self.patterns[i])
    }

    /// The subset at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> TrainingSet {
        TrainingSet {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            patterns: indices.iter().map(|&i| self.patterns[i].clone()).collect(),
        }
    }

    /// n x p matrix with one pattern per column.
    fn pattern_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, self.len(), |i, p| {
            f64::from(self.patterns[p].values()[i])
        })
    }

    fn require_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::Input("training set is empty".into()))
        } else {
            Ok(())
        }
    }
}

/// Learning rule used to build each network's weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rule {
    #[default]
    Pseudoinverse,
    Projection,
    Hebbian,
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pseudoinverse" | "pinv" => Ok(Rule::Pseudoinverse),
            "projection" => Ok(Rule::Projection),
            "hebbian" => Ok(Rule::Hebbian),
            other => Err(Error::Parameter(format!(
                "unknown rule {other:?} (expected pseudoinverse, projection or hebbian)"
            ))),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Pseudoinverse => "pseudoinverse",
            Rule::Projection => "projection",
            Rule::Hebbian => "hebbian",
        })
    }
}

/// Copy of `m` with its diagonal set to exactly zero.
pub fn zero_diagonal(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut out = m.clone();
    out.fill_diagonal(0.0);
    Ok(out)
}

fn hebbian_matrix(ts: &TrainingSet) -> Result<DMatrix<f64>> {
    ts.require_non_empty()?;
    let x = ts.pattern_matrix();
    // Entries are sums of +-1 products, exact in f64.
    zero_diagonal(&(&x * x.transpose()))
}

pub fn hebbian_weights(ts: &TrainingSet) -> Result<WeightMatrix> {
    WeightMatrix::from_dmatrix(&hebbian_matrix(ts)?)
}

/// Average `m` with its transpose so the result is symmetric bit-for-bit.
fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in j + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn pseudoinverse_rule_weights(ts: &TrainingSet) -> Result<WeightMatrix> {
    pseudoinverse_rule_weights_with_rtol(ts, DEFAULT_RTOL)
}

pub fn pseudoinverse_rule_weights_with_rtol(ts: &TrainingSet, rtol: f64) -> Result<WeightMatrix> {
    ts.require_non_empty()?;
    if ts.len() > ts.n() {
        return Err(Error::Capacity {
            patterns: ts.len(),
            nodes: ts.n(),
        });
    }
    let hebbian = hebbian_matrix(ts)?;
    if hebbian.iter().all(|&x| x == 0.0) {
        return Err(Error::Training(
            "Hebbian matrix is identically zero after removing the diagonal".into(),
        ));
    }
    let mut w = moore_penrose_pinv(&hebbian, rtol)?;
    symmetrize(&mut w);
    w.fill_diagonal(0.0);
    WeightMatrix::from_dmatrix(&w)
}

/// `X (X^T X)^-1 X^T` before the diagonal is removed. Stored patterns are
/// exact eigenvectors with eigenvalue 1.
pub fn projection_matrix(ts: &TrainingSet) -> Result<DMatrix<f64>> {
    ts.require_non_empty()?;
    if ts.len() > ts.n() {
        return Err(Error::Capacity {
            patterns: ts.len(),
            nodes: ts.n(),
        });
    }
    let x = ts.pattern_matrix();
    let gram = x.transpose() * &x;
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 1e-10 * max {
        return Err(Error::Training(format!(
            "patterns are linearly dependent (Gram eigenvalues span {min:e}..{max:e})"
        )));
    }
    // (X^T X)^-1 = V diag(1/lambda) V^T
    let mut scaled = eig.eigenvectors.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(k).scale_mut(1.0 / lambda);
    }
    let gram_inv = &scaled * eig.eigenvectors.transpose();
    let mut p = &x * gram_inv * x.transpose();
    symmetrize(&mut p);
    Ok(p)
}

pub fn projection_rule_weights(ts: &TrainingSet) -> Result<WeightMatrix> {
    let p = projection_matrix(ts)?;
    WeightMatrix::from_dmatrix(&zero_diagonal(&p)?)
}

/// Train one network with `rule`.
pub fn train_network(ts: &TrainingSet, rule: Rule) -> Result<WeightMatrix> {
    match rule {
        Rule::Pseudoinverse => pseudoinverse_rule_weights(ts),
        Rule::Projection => projection_rule_weights(ts),
        Rule::Hebbian => hebbian_weights(ts),
    }
}

/// Shuffle `0..p` with `seed` and deal it into `k` contiguous sets whose
/// sizes differ by at most one (the first `p % k` sets get the extra item).
pub fn partition(p: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::Parameter("network count must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut seed::rng(seed));
    let base = p / k;
    let extra = p % k;
    let mut sets = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        sets.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(sets)
}

/// Partition `ts` across `k` networks and train each independently.
pub fn train_bank(
    ts: &TrainingSet,
    geometry: Geometry,
    k: usize,
    rule: Rule,
    seed: u64,
) -> Result<NetworkBank> {
    ts.require_non_empty()?;
    if ts.n() != geometry.n() {
        return Err(Error::Dimension(format!(
            "patterns have {} nodes, geometry {geometry} needs {}",
            ts.n(),
            geometry.n()
        )));
    }
    if k == 0 {
        return Err(Error::Parameter("network count must be at least 1".into()));
    }
    let load = ts.len().div_ceil(k);
    if load > geometry.n() {
        return Err(Error::Capacity {
            patterns: load,
            nodes: geometry.n(),
        });
    }
    let sets = partition(ts.len(), k, seed)?;
    let networks = sets
        .par_iter()
        .map(|indices| train_network(&ts.subset(indices), rule))
        .collect::<Result<Vec<_>>>()?;
    let mut assignment = BTreeMap::new();
    for (net, indices) in sets.iter().enumerate() {
        for &i in indices {
            assignment.insert(ts.ids[i].clone(), net);
        }
    }
    NetworkBank::new(geometry, networks, assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_patterns(count: usize, n: usize, seed: u64) -> TrainingSet {
        let mut rng = seed::rng(seed);
        let pats = (0..count)
            .map(|_| {
                BipolarState::new((0..n).map(|_| if rng.random() { 1 } else { -1 }).collect())
                    .unwrap()
            })
            .collect();
        TrainingSet::from_patterns(pats).unwrap()
    }

    fn state(v: &[i8]) -> BipolarState {
        BipolarState::new(v.to_vec()).unwrap()
    }

    fn is_fixed_point(w: &WeightMatrix, s: &BipolarState) -> bool {
        (0..w.n()).all(|i| {
            let h: f64 = w
                .row(i)
                .iter()
                .zip(s.values())
                .map(|(a, &b)| a * f64::from(b))
                .sum();
            h * f64::from(s.values()[i]) >= 0.0
        })
    }

    #[test]
    fn training_set_validation() {
        assert!(TrainingSet::new(vec!["a".into()], vec![]).is_err());
        assert!(TrainingSet::new(
            vec!["a".into(), "a".into()],
            vec![state(&[1, -1]), state(&[1, 1])]
        )
        .is_err());
        assert!(TrainingSet::new(
            vec!["a".into(), "b".into()],
            vec![state(&[1, -1]), state(&[1])]
        )
        .is_err());
    }

    #[test]
    fn hebbian_small_cases() {
        let ts = TrainingSet::from_patterns(vec![state(&[1, -1])]).unwrap();
        let w = hebbian_weights(&ts).unwrap();
        assert_eq!(w.as_slice(), &[0.0, -1.0, -1.0, 0.0]);

        let ts = TrainingSet::from_patterns(vec![state(&[1, 1]), state(&[-1, -1])]).unwrap();
        assert_eq!(
            hebbian_weights(&ts).unwrap().as_slice(),
            &[0.0, 2.0, 2.0, 0.0]
        );

        let empty = TrainingSet::from_patterns(vec![]).unwrap();
        assert!(matches!(hebbian_weights(&empty), Err(Error::Input(_))));
    }

    #[test]
    fn hebbian_matches_double_loop() {
        let ts = random_patterns(10, 25, 3);
        let w = hebbian_weights(&ts).unwrap();
        for i in 0..25 {
            for j in 0..25 {
                let mut expected = 0i32;
                if i != j {
                    for p in ts.patterns() {
                        expected += i32::from(p.values()[i]) * i32::from(p.values()[j]);
                    }
                }
                assert_eq!(w.get(i, j), f64::from(expected), "({i}, {j})");
            }
        }
    }

    #[test]
    fn zero_diagonal_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[5.0, 1.0, 2.0, 7.0]);
        let z = zero_diagonal(&m).unwrap();
        assert_eq!(z, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]));
        assert_eq!(zero_diagonal(&z).unwrap(), z);
        let zeros = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(zero_diagonal(&zeros).unwrap(), zeros);
        assert!(zero_diagonal(&DMatrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn pinv_rule_is_symmetric_with_zero_diagonal() {
        let ts = random_patterns(12, 64, 5);
        let w = pseudoinverse_rule_weights(&ts).unwrap();
        for i in 0..64 {
            assert_eq!(w.get(i, i), 0.0);
            for j in 0..64 {
                assert_eq!(w.get(i, j), w.get(j, i));
            }
        }
    }

    #[test]
    fn pinv_rule_matches_thin_svd_closed_form() {
        // With X = U S V^T (thin), the zero-diagonal Hebbian matrix is
        // U (S^2 - p) U^T - p (I - U U^T); its pseudo-inverse is
        // U (S^2 - p)^-1 U^T - (I - U U^T) / p.
        let (p, n) = (20, 100);
        let ts = random_patterns(p, n, 8);
        let x = ts.pattern_matrix();
        let svd = x.svd(true, false);
        let u = svd.u.unwrap();
        let pf = p as f64;
        let mut core = DMatrix::zeros(p, p);
        for k in 0..p {
            core[(k, k)] = 1.0 / (svd.singular_values[k].powi(2) - pf);
        }
        let proj = &u * u.transpose();
        let expected = &u * core * u.transpose() - (DMatrix::identity(n, n) - proj) / pf;
        let expected = zero_diagonal(&expected).unwrap();
        let w = pseudoinverse_rule_weights(&ts).unwrap().to_dmatrix();
        assert!((w - &expected).norm() <= 1e-9 * expected.norm());
    }

    #[test]
    fn pinv_rule_stores_patterns_at_desk_scale() {
        let ts = random_patterns(30, 441, 21);
        let w = pseudoinverse_rule_weights(&ts).unwrap();
        let fixed = ts
            .patterns()
            .iter()
            .filter(|p| is_fixed_point(&w, p))
            .count();
        assert!(fixed * 100 >= 95 * 30, "{fixed}/30 fixed points");
    }

    #[test]
    fn pinv_rule_orthogonal_pair() {
        let ts =
            TrainingSet::from_patterns(vec![state(&[1, 1, 1, 1]), state(&[1, -1, 1, -1])]).unwrap();
        let w = pseudoinverse_rule_weights(&ts).unwrap();
        for p in ts.patterns() {
            assert!(is_fixed_point(&w, p));
        }
    }

    #[test]
    fn pinv_rule_errors() {
        let ts = random_patterns(5, 4, 1);
        assert!(matches!(
            pseudoinverse_rule_weights(&ts),
            Err(Error::Capacity {
                patterns: 5,
                nodes: 4
            })
        ));
        // Off-diagonal products cancel exactly.
        let ts = TrainingSet::from_patterns(vec![state(&[1, 1]), state(&[1, -1])]).unwrap();
        assert!(matches!(
            pseudoinverse_rule_weights(&ts),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn projection_single_pattern() {
        let ts = TrainingSet::from_patterns(vec![state(&[1, -1, 1])]).unwrap();
        let w = projection_rule_weights(&ts).unwrap();
        let xi = [1.0, -1.0, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { xi[i] * xi[j] / 3.0 };
                assert!((w.get(i, j) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_of_orthogonal_patterns_is_scaled_hebbian() {
        // Rows of a 8x8 Sylvester-Hadamard matrix are mutually orthogonal.
        let hadamard = |i: usize, j: usize| {
            if (i & j).count_ones().is_multiple_of(2) {
                1
            } else {
                -1
            }
        };
        let pats = [1usize, 2, 5]
            .iter()
            .map(|&r| state(&(0..8).map(|j| hadamard(r, j)).collect::<Vec<_>>()))
            .collect();
        let ts = TrainingSet::from_patterns(pats).unwrap();
        let w = projection_rule_weights(&ts).unwrap();
        let h = hebbian_weights(&ts).unwrap();
        for (a, b) in w.as_slice().iter().zip(h.as_slice()) {
            assert!((a - b / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_fixes_stored_patterns_before_zeroing() {
        let ts = random_patterns(30, 441, 4);
        let p = projection_matrix(&ts).unwrap();
        for xi in ts.patterns() {
            let v =
                nalgebra::DVector::from_iterator(441, xi.values().iter().map(|&x| f64::from(x)));
            assert!((&p * &v - &v).amax() <= 1e-8);
        }
    }

    #[test]
    fn projection_rejects_dependent_patterns() {
        let ts = TrainingSet::from_patterns(vec![state(&[1, -1, 1]), state(&[-1, 1, -1])]).unwrap();
        assert!(matches!(
            projection_rule_weights(&ts),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn partition_law() {
        let sets = partition(7, 3, 9).unwrap();
        let mut sizes: Vec<usize> = sets.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3]);
        let mut all: Vec<usize> = sets.concat();
        all.sort_unstable();
        assert_eq!(all, (0..7).collect::<Vec<_>>());

        let sets = partition(4000, 10, 1).unwrap();
        assert!(sets.iter().all(|s| s.len() == 400));
    }

    #[test]
    fn partition_is_seeded() {
        assert_eq!(partition(50, 4, 3).unwrap(), partition(50, 4, 3).unwrap());
        assert_ne!(partition(50, 4, 3).unwrap(), partition(50, 4, 4).unwrap());
        assert!(partition(5, 0, 1).is_err());
    }

    #[test]
    fn train_bank_assigns_every_pattern_once() {
        let ts = random_patterns(12, 36, 2);
        let g = Geometry::new(6, 6).unwrap();
        let bank = train_bank(&ts, g, 3, Rule::Pseudoinverse, 17).unwrap();
        assert_eq!(bank.k(), 3);
        assert_eq!(bank.assignment().len(), 12);
        for k in 0..3 {
            assert_eq!(bank.ids_in(k).count(), 4);
        }
        let again = train_bank(&ts, g, 3, Rule::Pseudoinverse, 17).unwrap();
        assert_eq!(bank, again);
    }

    #[test]
    fn train_bank_capacity() {
        let ts = random_patterns(10, 4, 2);
        let g = Geometry::new(2, 2).unwrap();
        assert!(matches!(
            train_bank(&ts, g, 1, Rule::Hebbian, 0),
            Err(Error::Capacity {
                patterns: 10,
                nodes: 4
            })
        ));
        assert!(train_bank(&ts, g, 3, Rule::Hebbian, 0).is_ok());
    }
}
