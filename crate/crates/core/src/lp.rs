//! Exact rational linear programming.
//!
//! Dense tableau simplex over exact rationals. Variables with a
//! single-variable lower bound are shifted to be nonnegative, free variables
//! are split in two. Pricing is Dantzig's rule until a run of degenerate
//! pivots, after which the solve switches for good to the smallest-index
//! rule, so every solve terminates.
//!
//! By default rows are generated lazily: the equalities are solved first,
//! then the most violated inequalities are added in batches and
//! reoptimized with the dual simplex until the point is feasible for all of
//! them.

use std::cmp::Ordering;

use num::{BigRational, Signed, Zero};
use serde::Serialize;

use crate::coords::CoordVector;
use crate::error::{BmeError, Result};
use crate::exact::Num;
use crate::facets::{LinearInequality, Sense};

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub n: usize,
    pub objective: CoordVector,
    pub inequalities: Vec<LinearInequality>,
    pub equalities: Vec<LinearInequality>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    pub optimum: Option<BigRational>,
    pub point: Option<CoordVector>,
    /// Indices into `inequalities` that hold with equality at `point`.
    pub tight: Vec<usize>,
    pub pivots: usize,
}

impl LpResult {
    fn without_point(status: LpStatus, pivots: usize) -> LpResult {
        LpResult { status, optimum: None, point: None, tight: Vec::new(), pivots }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    /// Add inequalities on demand instead of all at once.
    pub lazy: bool,
    /// Most violated rows added per round in lazy mode.
    pub batch: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { lazy: true, batch: 16 }
    }
}

/// A variable of the original problem in terms of tableau columns.
#[derive(Clone, Debug)]
enum VarMap {
    /// `x = lb + y`
    Shifted { col: usize, lb: BigRational },
    /// `x = y_plus - y_minus`
    Free { plus: usize, minus: usize },
}

/// A constraint rewritten over the tableau's structural columns, as
/// `coeffs . y  (sense)  rhs`.
#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, Num)>,
    sense: Sense,
    rhs: Num,
}

struct Tableau {
    rows: Vec<Vec<Num>>,
    rhs: Vec<Num>,
    basis: Vec<usize>,
    cost: Vec<Num>,
    obj: Num,
    ncols: usize,
    bland: bool,
    streak: usize,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    Infeasible,
}

impl Tableau {
    fn add_column(&mut self) -> usize {
        for r in &mut self.rows {
            r.push(Num::zero());
        }
        self.cost.push(Num::zero());
        self.ncols += 1;
        self.ncols - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        self.pivots += 1;
        let p = self.rows[r][c].clone();
        let nz: Vec<usize> = (0..self.ncols).filter(|&j| !self.rows[r][j].is_zero()).collect();
        if !p.is_one() {
            for &j in &nz {
                self.rows[r][j] = self.rows[r][j].div(&p);
            }
            self.rhs[r] = self.rhs[r].div(&p);
        }
        let (pivot_row, pivot_rhs) = (self.rows[r].clone(), self.rhs[r].clone());
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            let row = &mut self.rows[i];
            for &j in &nz {
                row[j] = row[j].sub(&f.mul(&pivot_row[j]));
            }
            self.rhs[i] = self.rhs[i].sub(&f.mul(&pivot_rhs));
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for &j in &nz {
                self.cost[j] = self.cost[j].sub(&f.mul(&pivot_row[j]));
            }
            self.obj = self.obj.add(&f.mul(&pivot_rhs));
        }
        self.basis[r] = c;
    }

    fn note_step(&mut self, degenerate: bool) {
        if degenerate {
            self.streak += 1;
            if self.streak > DEGENERATE_STREAK {
                self.bland = true;
            }
        } else {
            self.streak = 0;
        }
    }

    /// Primal simplex from a primal feasible basis; `banned` columns never enter.
    fn primal(&mut self, banned: usize) -> Outcome {
        loop {
            let mut enter: Option<usize> = None;
            for j in 0..banned.min(self.ncols) {
                if !self.cost[j].is_negative() {
                    continue;
                }
                if self.bland {
                    enter = Some(j);
                    break;
                }
                if enter.is_none_or(|e| self.cost[j].cmp(&self.cost[e]) == Ordering::Less) {
                    enter = Some(j);
                }
            }
            let Some(c) = enter else {
                return Outcome::Optimal;
            };
            let mut leave: Option<(usize, Num)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs[i].div(a);
                let better = match &leave {
                    None => true,
                    Some((l, best)) => match ratio.cmp(best) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[i] < self.basis[*l],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return Outcome::Unbounded;
            };
            self.note_step(ratio.is_zero());
            self.pivot(r, c);
        }
    }

    /// Dual simplex from a dual feasible basis.
    fn dual(&mut self) -> Outcome {
        loop {
            let mut leave: Option<usize> = None;
            for i in 0..self.rows.len() {
                if !self.rhs[i].is_negative() {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some(l) if self.bland => self.basis[i] < self.basis[l],
                    Some(l) => match self.rhs[i].cmp(&self.rhs[l]) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[i] < self.basis[l],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    leave = Some(i);
                }
            }
            let Some(r) = leave else {
                return Outcome::Optimal;
            };
            let mut enter: Option<(usize, Num)> = None;
            for j in 0..self.ncols {
                let a = &self.rows[r][j];
                if !a.is_negative() {
                    continue;
                }
                let ratio = self.cost[j].div(&a.neg());
                if enter.as_ref().is_none_or(|(_, best)| ratio.cmp(best) == Ordering::Less) {
                    enter = Some((j, ratio));
                }
            }
            let Some((c, ratio)) = enter else {
                return Outcome::Infeasible;
            };
            self.note_step(ratio.is_zero());
            self.pivot(r, c);
        }
    }

    /// Appends `row` (over structural columns) with a fresh slack, expressed
    /// in the current basis. Equality rows are not supported here.
    fn append_inequality(&mut self, row: &Row) {
        let slack = self.add_column();
        let mut dense = vec![Num::zero(); self.ncols];
        let flip = row.sense == Sense::Ge;
        for (c, v) in &row.coeffs {
            dense[*c] = if flip { v.neg() } else { v.clone() };
        }
        dense[slack] = Num::one();
        let mut rhs = if flip { row.rhs.neg() } else { row.rhs.clone() };
        for i in 0..self.rows.len() {
            let b = self.basis[i];
            if dense[b].is_zero() {
                continue;
            }
            let f = dense[b].clone();
            for (j, v) in self.rows[i].iter().enumerate() {
                if !v.is_zero() {
                    dense[j] = dense[j].sub(&f.mul(v));
                }
            }
            rhs = rhs.sub(&f.mul(&self.rhs[i]));
        }
        self.rows.push(dense);
        self.rhs.push(rhs);
        self.basis.push(slack);
    }
}

struct Prepared {
    vars: Vec<VarMap>,
    structural: usize,
    cost: Vec<Num>,
    equalities: Vec<Row>,
    /// Rewritten inequalities with their index; rows implied by the variable
    /// shift are left out.
    inequalities: Vec<(usize, Row)>,
}

fn single_lower_bound(q: &LinearInequality) -> Option<(usize, BigRational)> {
    let mut nz = q.coeffs.entries().iter().enumerate().filter(|(_, c)| !c.is_zero());
    let (j, c) = nz.next()?;
    if nz.next().is_some() {
        return None;
    }
    let lower = match q.sense {
        Sense::Ge => c.is_positive(),
        Sense::Le => c.is_negative(),
        Sense::Eq => false,
    };
    lower.then(|| (j, &q.rhs / c))
}

fn prepare(p: &LpProblem) -> Prepared {
    let dim = p.objective.len();
    let mut lbs: Vec<Option<BigRational>> = vec![None; dim];
    for q in &p.inequalities {
        if let Some((j, lb)) = single_lower_bound(q) {
            if lbs[j].as_ref().is_none_or(|cur| lb > *cur) {
                lbs[j] = Some(lb);
            }
        }
    }
    let mut vars = Vec::with_capacity(dim);
    let mut next = 0;
    for lb in &lbs {
        match lb {
            Some(lb) => {
                vars.push(VarMap::Shifted { col: next, lb: lb.clone() });
                next += 1;
            }
            None => {
                vars.push(VarMap::Free { plus: next, minus: next + 1 });
                next += 2;
            }
        }
    }
    let rewrite = |q: &LinearInequality| -> Row {
        let mut coeffs = Vec::new();
        let mut rhs = q.rhs.clone();
        for (j, c) in q.coeffs.entries().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            match &vars[j] {
                VarMap::Shifted { col, lb } => {
                    coeffs.push((*col, Num::from_big(c)));
                    rhs -= c * lb;
                }
                VarMap::Free { plus, minus } => {
                    coeffs.push((*plus, Num::from_big(c)));
                    coeffs.push((*minus, Num::from_big(&-c)));
                }
            }
        }
        Row { coeffs, sense: q.sense, rhs: Num::from_big(&rhs) }
    };
    let mut cost = vec![Num::zero(); next];
    for (j, c) in p.objective.entries().iter().enumerate() {
        match &vars[j] {
            VarMap::Shifted { col, .. } => cost[*col] = Num::from_big(c),
            VarMap::Free { plus, minus } => {
                cost[*plus] = Num::from_big(c);
                cost[*minus] = Num::from_big(&-c);
            }
        }
    }
    let mut equalities: Vec<Row> = p.equalities.iter().map(&rewrite).collect();
    let mut inequalities = Vec::new();
    for (i, q) in p.inequalities.iter().enumerate() {
        if q.sense == Sense::Eq {
            equalities.push(rewrite(q));
            continue;
        }
        if let Some((j, lb)) = single_lower_bound(q) {
            if lbs[j].as_ref().is_some_and(|cur| lb <= *cur) {
                continue;
            }
        }
        inequalities.push((i, rewrite(q)));
    }
    Prepared { vars, structural: next, cost, equalities, inequalities }
}

/// Phase one over `eq` equality rows and `le` inequality rows; returns a
/// primal feasible tableau, or `None` if the rows are infeasible.
fn phase_one(prep: &Prepared, eq: &[&Row], le: &[&Row]) -> (Option<Tableau>, usize) {
    let s = prep.structural;
    let mut t = Tableau {
        rows: Vec::new(),
        rhs: Vec::new(),
        basis: Vec::new(),
        cost: vec![Num::zero(); s],
        obj: Num::zero(),
        ncols: s,
        bland: false,
        streak: 0,
        pivots: 0,
    };
    // slack columns first, then artificials
    let mut pending: Vec<(Vec<Num>, Num, Option<usize>)> = Vec::new();
    for row in le {
        let slack = t.add_column();
        let flip = row.sense == Sense::Ge;
        let mut dense = vec![Num::zero(); s];
        for (c, v) in &row.coeffs {
            dense[*c] = if flip { v.neg() } else { v.clone() };
        }
        let rhs = if flip { row.rhs.neg() } else { row.rhs.clone() };
        pending.push((dense, rhs, Some(slack)));
    }
    for row in eq {
        let mut dense = vec![Num::zero(); s];
        for (c, v) in &row.coeffs {
            dense[*c] = v.clone();
        }
        pending.push((dense, row.rhs.clone(), None));
    }
    let first_artificial = t.ncols;
    for (mut dense, mut rhs, slack) in pending {
        dense.resize(first_artificial, Num::zero());
        let mut slack_sign = Num::one();
        if rhs.is_negative() {
            dense.iter_mut().for_each(|v| *v = v.neg());
            rhs = rhs.neg();
            slack_sign = slack_sign.neg();
        }
        if let Some(sc) = slack {
            dense[sc] = slack_sign.clone();
        }
        let basic = match slack {
            Some(sc) if slack_sign.is_positive() => sc,
            _ => {
                for r in &mut t.rows {
                    r.push(Num::zero());
                }
                t.cost.push(Num::zero());
                t.ncols += 1;
                dense.resize(t.ncols, Num::zero());
                dense[t.ncols - 1] = Num::one();
                t.ncols - 1
            }
        };
        dense.resize(t.ncols, Num::zero());
        t.rows.push(dense);
        t.rhs.push(rhs);
        t.basis.push(basic);
    }
    let artificial_rows: Vec<usize> = (0..t.rows.len()).filter(|&i| t.basis[i] >= first_artificial).collect();
    if !artificial_rows.is_empty() {
        for &i in &artificial_rows {
            t.obj = t.obj.add(&t.rhs[i]);
            for j in 0..first_artificial {
                t.cost[j] = t.cost[j].sub(&t.rows[i][j]);
            }
        }
        t.primal(first_artificial);
        if t.obj.is_positive() {
            return (None, t.pivots);
        }
        // drive remaining artificials out of the basis
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] < first_artificial {
                i += 1;
                continue;
            }
            match (0..first_artificial).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                }
            }
        }
        for r in &mut t.rows {
            r.truncate(first_artificial);
        }
        t.cost.truncate(first_artificial);
        t.ncols = first_artificial;
    }
    // phase two costs
    t.cost = prep.cost.clone();
    t.cost.resize(t.ncols, Num::zero());
    t.obj = Num::zero();
    for i in 0..t.rows.len() {
        let cb = t.cost[t.basis[i]].clone();
        if cb.is_zero() {
            continue;
        }
        for j in 0..t.ncols {
            if !t.rows[i][j].is_zero() {
                t.cost[j] = t.cost[j].sub(&cb.mul(&t.rows[i][j]));
            }
        }
        t.obj = t.obj.add(&cb.mul(&t.rhs[i]));
    }
    t.streak = 0;
    (Some(t), 0)
}

fn structural_values(t: &Tableau, structural: usize) -> Vec<BigRational> {
    let mut y = vec![BigRational::zero(); structural];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < structural {
            y[b] = t.rhs[i].to_big();
        }
    }
    y
}

fn point_from(prep: &Prepared, y: &[BigRational], n: usize) -> CoordVector {
    let entries = prep
        .vars
        .iter()
        .map(|v| match v {
            VarMap::Shifted { col, lb } => lb + &y[*col],
            VarMap::Free { plus, minus } => &y[*plus] - &y[*minus],
        })
        .collect();
    CoordVector::new(n, entries).expect("length matches the problem")
}

fn row_violation(row: &Row, y: &[BigRational]) -> BigRational {
    let mut lhs = BigRational::zero();
    for (c, v) in &row.coeffs {
        if !y[*c].is_zero() {
            lhs += v.to_big() * &y[*c];
        }
    }
    let rhs = row.rhs.to_big();
    match row.sense {
        Sense::Le => lhs - rhs,
        Sense::Ge => rhs - lhs,
        Sense::Eq => (lhs - rhs).abs(),
    }
}

fn validate(p: &LpProblem) -> Result<()> {
    let dim = p.objective.len();
    for q in p.inequalities.iter().chain(&p.equalities) {
        if q.coeffs.len() != dim {
            return Err(BmeError::domain("constraint dimension differs from the objective"));
        }
    }
    if p.equalities.iter().any(|q| q.sense != Sense::Eq) {
        return Err(BmeError::domain("equality list holds a non-equality"));
    }
    Ok(())
}

/// Minimizes `objective . x` exactly, with the default options.
pub fn lp_min(p: &LpProblem) -> Result<LpResult> {
    lp_min_with(p, LpOptions::default())
}

pub fn lp_min_with(p: &LpProblem, opts: LpOptions) -> Result<LpResult> {
    validate(p)?;
    let prep = prepare(p);
    let eq: Vec<&Row> = prep.equalities.iter().collect();
    let result = if opts.lazy {
        solve_lazy(p, &prep, &eq, opts.batch.max(1))
    } else {
        solve_full(p, &prep, &eq)
    };
    Ok(result)
}

fn solve_full(p: &LpProblem, prep: &Prepared, eq: &[&Row]) -> LpResult {
    let le: Vec<&Row> = prep.inequalities.iter().map(|(_, r)| r).collect();
    let (t, pivots) = phase_one(prep, eq, &le);
    let Some(mut t) = t else {
        return LpResult::without_point(LpStatus::Infeasible, pivots);
    };
    match t.primal(t.ncols) {
        Outcome::Unbounded => LpResult::without_point(LpStatus::Unbounded, t.pivots),
        Outcome::Infeasible => unreachable!("primal simplex keeps feasibility"),
        Outcome::Optimal => finish(p, prep, &t),
    }
}

fn solve_lazy(p: &LpProblem, prep: &Prepared, eq: &[&Row], batch: usize) -> LpResult {
    let (t, pivots) = phase_one(prep, eq, &[]);
    let Some(mut t) = t else {
        return LpResult::without_point(LpStatus::Infeasible, pivots);
    };
    let mut added = vec![false; prep.inequalities.len()];
    match t.primal(t.ncols) {
        Outcome::Optimal => {}
        // the restricted problem may be unbounded while the full one is not
        Outcome::Unbounded => return solve_full(p, prep, eq),
        Outcome::Infeasible => unreachable!("primal simplex keeps feasibility"),
    }
    loop {
        let y = structural_values(&t, prep.structural);
        let mut violated: Vec<(BigRational, usize)> = prep
            .inequalities
            .iter()
            .enumerate()
            .filter(|(k, _)| !added[*k])
            .filter_map(|(k, (_, row))| {
                let v = row_violation(row, &y);
                v.is_positive().then_some((v, k))
            })
            .collect();
        if violated.is_empty() {
            return finish(p, prep, &t);
        }
        violated.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, k) in violated.into_iter().take(batch) {
            added[k] = true;
            t.append_inequality(&prep.inequalities[k].1);
        }
        match t.dual() {
            Outcome::Optimal => {}
            Outcome::Infeasible => {
                return LpResult::without_point(LpStatus::Infeasible, t.pivots);
            }
            Outcome::Unbounded => unreachable!("dual simplex reports infeasibility only"),
        }
    }
}

fn finish(p: &LpProblem, prep: &Prepared, t: &Tableau) -> LpResult {
    let y = structural_values(t, prep.structural);
    let x = point_from(prep, &y, p.n);
    for q in p.equalities.iter().chain(&p.inequalities) {
        assert!(q.holds(&x).expect("same dimension"), "simplex returned an infeasible point");
    }
    let optimum = p.objective.dot(&x).expect("same dimension");
    let tight = p
        .inequalities
        .iter()
        .enumerate()
        .filter(|(_, q)| q.is_tight(&x).expect("same dimension"))
        .map(|(i, _)| i)
        .collect();
    LpResult {
        status: LpStatus::Optimal,
        optimum: Some(optimum),
        point: Some(x),
        tight,
        pivots: t.pivots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::{pair_count, x_vector};
    use crate::facets::{splitohedron_catalog, Family};
    use crate::trees::enumerate_binary_trees;
    use num::BigInt;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn q(n: usize, coeffs: &[(usize, i64)], sense: Sense, rhs: i64) -> LinearInequality {
        let mut v = CoordVector::zeros(n);
        let mut e = v.entries().to_vec();
        for &(j, c) in coeffs {
            e[j] = BigRational::from_integer(c.into());
        }
        v = CoordVector::new(n, e).unwrap();
        LinearInequality {
            coeffs: v,
            sense,
            rhs: BigRational::from_integer(rhs.into()),
            family: Family::Custom,
            params: Vec::new(),
        }
    }

    fn catalog_problem(n: usize, objective: CoordVector) -> LpProblem {
        let cat = splitohedron_catalog(n).unwrap();
        LpProblem { n, objective, inequalities: cat.inequalities, equalities: cat.equalities }
    }

    fn both(p: &LpProblem) -> (LpResult, LpResult) {
        let a = lp_min_with(p, LpOptions { lazy: true, batch: 4 }).unwrap();
        let b = lp_min_with(p, LpOptions { lazy: false, batch: 1 }).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.optimum, b.optimum);
        (a, b)
    }

    #[test]
    fn minimizing_one_coordinate_hits_its_lower_bound() {
        let n = 5;
        let mut obj = CoordVector::zeros(n);
        obj.set(1, 2, BigRational::from_integer(1.into()));
        let (r, _) = both(&catalog_problem(n, obj));
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.optimum, Some(BigRational::from_integer(1.into())));
        let p = catalog_problem(n, CoordVector::zeros(n));
        assert!(r.tight.iter().any(|&i| p.inequalities[i].family == Family::Caterpillar));
    }

    #[test]
    fn zero_objective_is_zero() {
        let (r, _) = both(&catalog_problem(6, CoordVector::zeros(6)));
        assert_eq!(r.optimum, Some(BigRational::zero()));
    }

    #[test]
    fn contradictions_are_infeasible() {
        let n = 3;
        let p = LpProblem {
            n,
            objective: CoordVector::zeros(n),
            inequalities: vec![q(n, &[(0, 1)], Sense::Ge, 3), q(n, &[(0, 1)], Sense::Le, 1)],
            equalities: Vec::new(),
        };
        let (r, _) = both(&p);
        assert_eq!(r.status, LpStatus::Infeasible);
        assert!(r.point.is_none());
    }

    #[test]
    fn unbounded_and_free_variables() {
        let n = 3;
        // minimize x12 subject to x12 + x13 = 1, no bounds
        let mut obj = CoordVector::zeros(n);
        obj.set(1, 2, BigRational::from_integer(1.into()));
        let p = LpProblem {
            n,
            objective: obj.clone(),
            inequalities: Vec::new(),
            equalities: vec![q(n, &[(0, 1), (1, 1)], Sense::Eq, 1)],
        };
        assert_eq!(both(&p).0.status, LpStatus::Unbounded);
        // with x13 <= 5 the optimum is x12 = -4
        let p = LpProblem { inequalities: vec![q(n, &[(1, 1)], Sense::Le, 5)], ..p };
        let (r, _) = both(&p);
        assert_eq!(r.optimum, Some(BigRational::from_integer((-4).into())));
        assert_eq!(r.tight, vec![0]);
    }

    #[test]
    fn fractional_vertices_are_exact() {
        let n = 3;
        // min -x12 - x13 s.t. 2 x12 + x13 <= 3, x12 + 3 x13 <= 4, x >= 0
        let mut obj = CoordVector::zeros(n);
        obj.set(1, 2, BigRational::from_integer((-1).into()));
        obj.set(1, 3, BigRational::from_integer((-1).into()));
        let p = LpProblem {
            n,
            objective: obj,
            inequalities: vec![
                q(n, &[(0, 2), (1, 1)], Sense::Le, 3),
                q(n, &[(0, 1), (1, 3)], Sense::Le, 4),
                q(n, &[(0, 1)], Sense::Ge, 0),
                q(n, &[(1, 1)], Sense::Ge, 0),
                q(n, &[(2, 1)], Sense::Ge, 0),
            ],
            equalities: Vec::new(),
        };
        let (r, _) = both(&p);
        let pt = r.point.unwrap();
        assert_eq!(*pt.get(1, 2), BigRational::new(BigInt::from(1), BigInt::from(1)));
        assert_eq!(*pt.get(1, 3), BigRational::new(BigInt::from(1), BigInt::from(1)));
        assert_eq!(r.optimum, Some(BigRational::from_integer((-2).into())));
        let p = LpProblem {
            inequalities: vec![
                q(n, &[(0, 3), (1, 2)], Sense::Le, 5),
                q(n, &[(0, 1), (1, 3)], Sense::Le, 5),
                q(n, &[(0, 1)], Sense::Ge, 0),
                q(n, &[(1, 1)], Sense::Ge, 0),
                q(n, &[(2, 1)], Sense::Ge, 0),
            ],
            ..p
        };
        let (r, _) = both(&p);
        let pt = r.point.unwrap();
        assert_eq!(*pt.get(1, 2), BigRational::new(BigInt::from(5), BigInt::from(7)));
        assert_eq!(*pt.get(1, 3), BigRational::new(BigInt::from(10), BigInt::from(7)));
        assert_eq!(r.optimum, Some(BigRational::new(BigInt::from(-15), BigInt::from(7))));
        assert_eq!(r.tight, vec![0, 1, 4]);
    }

    #[test]
    fn relaxation_lower_bounds_every_tree() {
        let mut rng = StdRng::seed_from_u64(11);
        for n in [6, 7] {
            let trees: Vec<CoordVector> =
                enumerate_binary_trees(n).unwrap().map(|t| x_vector(&t).unwrap()).collect();
            for _ in 0..10 {
                let entries = (0..pair_count(n))
                    .map(|_| BigRational::new(rng.gen_range(0..50).into(), rng.gen_range(1..5).into()))
                    .collect();
                let d = CoordVector::new(n, entries).unwrap();
                let r = lp_min(&catalog_problem(n, d.clone())).unwrap();
                let lb = r.optimum.unwrap();
                let best = trees.iter().map(|x| d.dot(x).unwrap()).min().unwrap();
                assert!(lb <= best);
            }
        }
    }

    #[test]
    fn lazy_and_full_agree_on_random_objectives() {
        let mut rng = StdRng::seed_from_u64(3);
        for n in [5, 6] {
            for _ in 0..5 {
                let entries = (0..pair_count(n))
                    .map(|_| BigRational::from_integer(rng.gen_range(0..20).into()))
                    .collect();
                let (a, b) = both(&catalog_problem(n, CoordVector::new(n, entries).unwrap()));
                assert_eq!(a.status, LpStatus::Optimal);
                assert_eq!(a.optimum, b.optimum);
            }
        }
    }

    #[test]
    fn tight_set_is_exact() {
        let n = 6;
        let d = x_vector(&crate::trees::parse_newick("((1,2),(3,4),(5,6));").unwrap()).unwrap();
        let p = catalog_problem(n, d);
        let r = lp_min(&p).unwrap();
        let x = r.point.unwrap();
        for (i, c) in p.inequalities.iter().enumerate() {
            assert_eq!(r.tight.contains(&i), c.lhs(&x).unwrap() == c.rhs);
        }
    }

    /// Whether the other catalog rows imply `cat.inequalities[k]`.
    fn implied(cat: &crate::facets::SplitohedronCatalog, k: usize) -> bool {
        let q = &cat.inequalities[k];
        let n = cat.n;
        let rest: Vec<LinearInequality> = cat
            .inequalities
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, q)| q.clone())
            .collect();
        // push as far as possible past the dropped row
        let objective = match q.sense {
            Sense::Le => CoordVector::zeros(n).sub(&q.coeffs),
            _ => q.coeffs.clone(),
        };
        let p = LpProblem { n, objective, inequalities: rest, equalities: cat.equalities.clone() };
        let r = lp_min(&p).unwrap();
        match (r.status, r.optimum) {
            (LpStatus::Optimal, Some(o)) if q.sense == Sense::Le => -o <= q.rhs,
            (LpStatus::Optimal, Some(o)) => o >= q.rhs,
            _ => false,
        }
    }

    #[test]
    fn only_the_cherry_clade_rows_are_redundant() {
        for n in [5, 6] {
            let cat = splitohedron_catalog(n).unwrap();
            for (k, q) in cat.inequalities.iter().enumerate() {
                assert_eq!(implied(&cat, k), q.family == Family::CherryClade, "n={n}: {}", q.render());
            }
        }
    }
}

