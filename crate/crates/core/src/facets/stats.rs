use num::{BigInt, One, Zero};
use serde::Serialize;

use super::{
    caterpillar_family, cyclic_ordering_family, dedup_by_tight_set, dimension, double_factorial,
    facet_splits, intersecting_cherry_family, split_facet, tree_count, LinearInequality,
    TIGHT_SCAN_LIMIT,
};
use crate::coords::{pair_count, x_exponents};
use crate::error::{BmeError, Result};
use crate::trees::enumerate_binary_trees;

/// One row of the facet table.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyStats {
    pub family: String,
    /// Inequality template, e.g. `x_ab >= 1`.
    pub inequality: String,
    pub count: String,
    /// Number of vertices on each facet of the family, from the closed formula.
    pub tight_formula: String,
    /// Observed tight-set sizes when verified by enumeration.
    pub tight_observed: Option<Vec<usize>>,
}

impl FamilyStats {
    pub fn verified(&self) -> Option<bool> {
        self.tight_observed
            .as_ref()
            .map(|obs| obs.len() == 1 && obs[0].to_string() == self.tight_formula)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FacetStatsReport {
    pub n: usize,
    pub dimension: usize,
    pub vertices: String,
    /// Total facet count where it is known from the literature (n <= 6).
    pub known_facet_total: Option<u64>,
    /// Split-facet total `2^(n-1) - C(n,2) - n - 1` (n >= 5).
    pub split_facet_total: Option<String>,
    pub families: Vec<FamilyStats>,
    pub verified_by_enumeration: bool,
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn factorial(m: usize) -> BigInt {
    (1..=m).fold(BigInt::one(), |acc, k| acc * k)
}

/// Sizes of the tight sets of `qs`, deduplicated and sorted.
fn observed_tight_sizes(qs: &[LinearInequality], exps: &[Vec<u32>]) -> Result<Vec<usize>> {
    let mut sizes = Vec::new();
    for q in qs {
        let mut tight = 0;
        for e in exps {
            let slack = q.slack_on_exponents(e);
            if !q.satisfied_by_slack(&slack) {
                return Err(BmeError::ValidityViolation {
                    inequality: q.render(),
                    counterexample: format!("{e:?}"),
                });
            }
            if slack.is_zero() {
                tight += 1;
            }
        }
        sizes.push(tight);
    }
    sizes.sort_unstable();
    sizes.dedup();
    Ok(sizes)
}

/// Dimension, vertex count, facet families and their vertex counts.
///
/// With `verify`, every family's tight-set size is recomputed by enumerating
/// the binary trees (allowed up to the tightness-scan guard).
pub fn facet_stats(n: usize, verify: bool) -> Result<FacetStatsReport> {
    if n < 4 {
        return Err(BmeError::domain(format!("facet statistics need n >= 4, got {n}")));
    }
    if verify && n > TIGHT_SCAN_LIMIT {
        return Err(BmeError::Guard {
            operation: "facet_stats verification",
            n,
            limit: TIGHT_SCAN_LIMIT,
        });
    }
    let exps: Vec<Vec<u32>> = if verify {
        enumerate_binary_trees(n)?.map(|t| x_exponents(&t)).collect()
    } else {
        Vec::new()
    };
    let observe = |qs: &[LinearInequality]| -> Result<Option<Vec<usize>>> {
        if verify {
            observed_tight_sizes(qs, &exps).map(Some)
        } else {
            Ok(None)
        }
    };

    let mut families = Vec::new();
    let pairs_n = pair_count(n);

    // at n = 4 both families describe the same three facets twice
    let mut caterpillars = caterpillar_family(n);
    let mut cherries = intersecting_cherry_family(n);
    if n == 4 {
        caterpillars = dedup_by_tight_set(&caterpillars, n)?;
        cherries = dedup_by_tight_set(&cherries, n)?;
    }
    let cat_count = if n == 4 { BigInt::from(3) } else { BigInt::from(pairs_n) };
    families.push(FamilyStats {
        family: "caterpillar".into(),
        inequality: "x_ab >= 1".into(),
        count: cat_count.to_string(),
        tight_formula: factorial(n - 2).to_string(),
        tight_observed: observe(&caterpillars)?,
    });
    let ic_count = if n == 4 { BigInt::from(3) } else { BigInt::from(pairs_n * (n - 2)) };
    families.push(FamilyStats {
        family: "intersecting-cherry".into(),
        inequality: format!("x_ab + x_bc - x_ac <= {}", BigInt::one() << (n - 3)),
        count: ic_count.to_string(),
        tight_formula: (BigInt::from(2) * double_factorial(2 * n as i64 - 7)).to_string(),
        tight_observed: observe(&cherries)?,
    });
    if n == 5 {
        let cyc = cyclic_ordering_family();
        families.push(FamilyStats {
            family: "cyclic-ordering".into(),
            inequality: "x_ab + x_bc + x_cd + x_de + x_ea <= 13".into(),
            count: cyc.len().to_string(),
            tight_formula: "5".into(),
            tight_observed: observe(&cyc)?,
        });
    }
    // splits grouped by shape (k, m), k <= m, both at least 3
    for k in 3..=n / 2 {
        let m = n - k;
        if m < 3 {
            continue;
        }
        let mut count = binomial(n, k);
        if k == m {
            count /= 2;
        }
        let qs: Vec<LinearInequality> = if verify {
            facet_splits(n)
                .iter()
                .filter(|s| s.shape() == (k, m))
                .map(|s| split_facet(s).expect("large parts"))
                .collect()
        } else {
            Vec::new()
        };
        let tight = double_factorial(2 * m as i64 - 3) * double_factorial(2 * k as i64 - 3);
        families.push(FamilyStats {
            family: format!("({m},{k})-split"),
            inequality: format!("sum_(i<j in S1, |S1| = {k}) x_ij <= {}", BigInt::from(k - 1) << (n - 3)),
            count: count.to_string(),
            tight_formula: tight.to_string(),
            tight_observed: observe(&qs)?,
        });
    }

    let split_facet_total = (n >= 5).then(|| {
        ((BigInt::one() << (n - 1)) - BigInt::from(pairs_n) - BigInt::from(n) - BigInt::one()).to_string()
    });
    let known_facet_total = match n {
        4 => Some(3),
        5 => Some(52),
        6 => Some(90262),
        _ => None,
    };
    Ok(FacetStatsReport {
        n,
        dimension: dimension(n),
        vertices: tree_count(n).to_string(),
        known_facet_total,
        split_facet_total,
        families,
        verified_by_enumeration: verify,
    })
}
