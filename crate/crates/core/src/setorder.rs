//! Minimal and weakly minimal elements of finite image sets, minimal-value classes
//! and the partition set built from them.
//!
//! All index sets are zero-based and sorted ascending.

use nalgebra::DVector;

use crate::cone::ConeSpec;
use crate::error::{check_dim, Error, Result};

/// Indices `i` such that no `values[j] != values[i]` satisfies `values[j] ⪯ values[i]`.
pub fn minimal_elements(cone: &ConeSpec, values: &[DVector<f64>]) -> Result<Vec<usize>> {
    minimal_elements_tol(cone, values, 0.0)
}

/// [`minimal_elements`] with a slack on the dominance test.
pub fn minimal_elements_tol(
    cone: &ConeSpec,
    values: &[DVector<f64>],
    tol: f64,
) -> Result<Vec<usize>> {
    validate(cone, values)?;
    Ok((0..values.len())
        .filter(|&i| {
            !values
                .iter()
                .any(|vj| vj != &values[i] && cone.leq_unchecked(vj, &values[i], tol))
        })
        .collect())
}

/// Indices `i` such that no `values[j] ≺ values[i]`.
pub fn weakly_minimal_elements(cone: &ConeSpec, values: &[DVector<f64>]) -> Result<Vec<usize>> {
    validate(cone, values)?;
    Ok((0..values.len())
        .filter(|&i| {
            !values
                .iter()
                .any(|vj| cone.lt_unchecked(vj, &values[i], 0.0))
        })
        .collect())
}

fn validate(cone: &ConeSpec, values: &[DVector<f64>]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    values
        .iter()
        .try_for_each(|v| check_dim(cone.dim(), v.len()))
}

/// Indices sharing one minimal value.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalClass {
    pub members: Vec<usize>,
    /// Value of the smallest member.
    pub representative: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalStructure {
    pub minimal: Vec<usize>,
    pub weakly_minimal: Vec<usize>,
    pub classes: Vec<MinimalClass>,
}

impl MinimalStructure {
    /// Computes `Min`, `WMin` and the value classes of `values`.
    pub fn compute(
        cone: &ConeSpec,
        values: &[DVector<f64>],
        tol_order: f64,
        tol_group: f64,
    ) -> Result<Self> {
        let minimal = minimal_elements_tol(cone, values, tol_order)?;
        let weakly_minimal = weakly_minimal_elements(cone, values)?;
        let classes = group_minimal_values(values, &minimal, tol_group);
        Ok(Self {
            minimal,
            weakly_minimal,
            classes,
        })
    }

    /// Number of distinct minimal values.
    pub fn w(&self) -> usize {
        self.classes.len()
    }

    pub fn partitions(&self) -> PartitionIter {
        PartitionIter::new(self.classes.iter().map(|c| c.members.clone()).collect())
    }

    /// `|P_x| = prod_j |I_{r_j}|`, saturating.
    pub fn partition_count(&self) -> u128 {
        self.classes
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.members.len() as u128))
    }
}

/// Connected components of the minimal indices under `|v_i - v_j|_inf <= tol_group`,
/// ordered by smallest member.
pub fn group_minimal_values(
    values: &[DVector<f64>],
    minimal: &[usize],
    tol_group: f64,
) -> Vec<MinimalClass> {
    let k = minimal.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for a in 0..k {
        for b in a + 1..k {
            let d = (&values[minimal[a]] - &values[minimal[b]]).amax();
            if d <= tol_group {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by_key(|&a| minimal[a]);
        idx
    };
    let mut classes: Vec<(usize, Vec<usize>)> = Vec::new();
    for a in order {
        let root = find(&mut parent, a);
        match classes.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(minimal[a]),
            None => classes.push((root, vec![minimal[a]])),
        }
    }
    classes
        .into_iter()
        .map(|(_, members)| MinimalClass {
            representative: values[members[0]].clone(),
            members,
        })
        .collect()
}

/// Lexicographic enumeration of `I_{r_1} x ... x I_{r_w}`; the last slot varies fastest.
#[derive(Debug, Clone)]
pub struct PartitionIter {
    classes: Vec<Vec<usize>>,
    cursor: Option<Vec<usize>>,
}

impl PartitionIter {
    pub fn new(classes: Vec<Vec<usize>>) -> Self {
        let cursor = if classes.iter().any(|c| c.is_empty()) {
            None
        } else {
            Some(vec![0; classes.len()])
        };
        Self { classes, cursor }
    }
}

impl Iterator for PartitionIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.cursor.as_mut()?;
        let item: Vec<usize> = cur.iter().zip(&self.classes).map(|(&k, c)| c[k]).collect();
        let mut slot = cur.len();
        loop {
            if slot == 0 {
                self.cursor = None;
                break;
            }
            slot -= 1;
            cur[slot] += 1;
            if cur[slot] < self.classes[slot].len() {
                break;
            }
            cur[slot] = 0;
        }
        Some(item)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(v: &[[f64; 2]]) -> Vec<DVector<f64>> {
        v.iter().map(|r| DVector::from_column_slice(r)).collect()
    }

    fn ex5_cone() -> ConeSpec {
        ConeSpec::from_rows(&[vec![6.0, -2.0], vec![-7.0, 10.0]], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn minimal_examples() {
        let c = ConeSpec::nonnegative_orthant(2);
        assert_eq!(
            minimal_elements(&c, &vals(&[[1.0, 2.0], [2.0, 1.0], [3.0, 3.0]])).unwrap(),
            vec![0, 1]
        );
        assert_eq!(
            minimal_elements(&c, &vals(&[[5.0, -1.0]])).unwrap(),
            vec![0]
        );
        assert_eq!(
            minimal_elements(&ex5_cone(), &vals(&[[0.0, 0.0], [1.0, 1.0]])).unwrap(),
            vec![0]
        );
        assert!(matches!(minimal_elements(&c, &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn weakly_minimal_examples() {
        let c = ConeSpec::nonnegative_orthant(2);
        assert_eq!(
            weakly_minimal_elements(&c, &vals(&[[1.0, 2.0], [1.0, 3.0]])).unwrap(),
            vec![0, 1]
        );
        assert_eq!(
            weakly_minimal_elements(&c, &vals(&[[2.0, 2.0]; 4])).unwrap(),
            vec![0, 1, 2, 3]
        );
        assert_eq!(
            weakly_minimal_elements(&c, &vals(&[[0.0, 0.0], [1.0, 1.0]])).unwrap(),
            vec![0]
        );
    }

    #[test]
    fn duplicates_share_a_class() {
        let c = ConeSpec::nonnegative_orthant(2);
        let v = vals(&[[1.0, 2.0], [2.0, 1.0], [1.0, 2.0], [2.0, 1.0 + 1e-9]]);
        let ms = MinimalStructure::compute(&c, &v, 0.0, 1e-8).unwrap();
        assert_eq!(ms.minimal, vec![0, 1, 2]);
        assert_eq!(ms.w(), 2);
        assert_eq!(ms.classes[0].members, vec![0, 2]);
        assert_eq!(ms.classes[1].members, vec![1]);

        let g = group_minimal_values(&v, &[0, 1, 2, 3], 1e-8);
        assert_eq!(g[1].members, vec![1, 3]);
        assert_eq!(g[1].representative, v[1]);
        assert_eq!(group_minimal_values(&v, &[0, 1, 2, 3], 1e-10).len(), 3);
    }

    #[test]
    fn grouping_is_transitive_through_chains() {
        let v = vals(&[[0.0, 0.0], [0.6e-8, 0.0], [1.2e-8, 0.0]]);
        let g = group_minimal_values(&v, &[2, 0, 1], 1e-8);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members, vec![0, 1, 2]);
    }

    #[test]
    fn partition_order_and_count() {
        let got: Vec<_> = PartitionIter::new(vec![vec![0, 1], vec![2]]).collect();
        assert_eq!(got, vec![vec![0, 2], vec![1, 2]]);
        assert_eq!(
            PartitionIter::new(vec![vec![0, 1], vec![2, 3, 4]]).count(),
            6
        );
        let single: Vec<_> = PartitionIter::new(vec![vec![3], vec![1], vec![7]]).collect();
        assert_eq!(single, vec![vec![3, 1, 7]]);
        let lex: Vec<_> = PartitionIter::new(vec![vec![0, 1], vec![2, 3]]).collect();
        assert_eq!(lex, vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3]]);
    }
}
