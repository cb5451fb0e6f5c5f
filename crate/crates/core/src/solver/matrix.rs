use num::{BigRational, Signed, Zero};

use crate::coords::{pair_count, pair_rank, pairs, CoordVector};
use crate::error::{BmeError, Result};
use crate::exact::parse_rational;
use crate::trees::Leaf;

/// Symmetric nonnegative dissimilarities, stored as the upper triangle in
/// lexicographic pair order, with an optional taxon name per leaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    entries: CoordVector,
    names: Option<Vec<String>>,
}

impl DistanceMatrix {
    pub fn new(entries: CoordVector) -> Result<DistanceMatrix> {
        for ((i, j), v) in pairs(entries.n()).zip(entries.entries()) {
            if v.is_negative() {
                return Err(BmeError::domain(format!("negative entry at ({i},{j})")));
            }
        }
        Ok(DistanceMatrix { entries, names: None })
    }

    /// From a full square matrix; checks exact symmetry and a zero diagonal.
    pub fn from_square(rows: &[Vec<BigRational>]) -> Result<DistanceMatrix> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(BmeError::domain(format!(
                "row {} has {} entries, expected {n}",
                i + 1,
                r.len()
            )));
        }
        for i in 0..n {
            if !rows[i][i].is_zero() {
                return Err(BmeError::domain(format!("nonzero diagonal entry at ({},{})", i + 1, i + 1)));
            }
            for j in i + 1..n {
                if rows[i][j] != rows[j][i] {
                    return Err(BmeError::domain(format!(
                        "asymmetric entries at ({},{}) and ({},{})",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        let entries = pairs(n).map(|(i, j)| rows[i - 1][j - 1].clone()).collect();
        DistanceMatrix::new(CoordVector::new(n, entries)?)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<DistanceMatrix> {
        if names.len() != self.n() {
            return Err(BmeError::domain("one name per taxon is required"));
        }
        let mut sorted = names.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(BmeError::domain("taxon names must be distinct"));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.entries.n()
    }

    pub fn get(&self, i: Leaf, j: Leaf) -> BigRational {
        if i == j {
            BigRational::zero()
        } else {
            self.entries.entries()[pair_rank(i.min(j), i.max(j), self.n())].clone()
        }
    }

    pub fn as_coords(&self) -> &CoordVector {
        &self.entries
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Name of a leaf, or its number when there is no name table.
    pub fn name(&self, leaf: Leaf) -> String {
        match &self.names {
            Some(names) => names[leaf - 1].clone(),
            None => leaf.to_string(),
        }
    }
}

fn value(token: &str, row: usize, col: usize) -> Result<BigRational> {
    parse_rational(token).map_err(|_| {
        BmeError::parse(0, format!("entry ({row},{col}) is not a number: {token:?}"))
    })
}

/// PHYLIP distance matrix: a taxon count, then one row per taxon holding a
/// name and either the full row, the lower triangle, or the lower triangle
/// with the diagonal.
pub fn parse_phylip(text: &str) -> Result<DistanceMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| BmeError::parse(0, "empty input"))?;
    let n: usize = header
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| BmeError::parse(0, "first line must hold the taxon count"))?;
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split_whitespace().collect()).collect();
    if rows.len() != n {
        return Err(BmeError::parse(0, format!("expected {n} rows, found {}", rows.len())));
    }
    let width = rows[0].len() - 1;
    let layout = match width {
        w if w == n => Layout::Square,
        0 => Layout::Lower,
        1 => Layout::LowerDiagonal,
        w => return Err(BmeError::parse(0, format!("row 1 has {w} values; cannot tell the layout"))),
    };
    let mut full = vec![vec![BigRational::zero(); n]; n];
    let mut names = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let want = match layout {
            Layout::Square => n,
            Layout::Lower => i,
            Layout::LowerDiagonal => i + 1,
        };
        if row.len() != want + 1 {
            return Err(BmeError::parse(
                0,
                format!("row {} has {} values, expected {want}", i + 1, row.len() - 1),
            ));
        }
        names.push(row[0].to_string());
        for (j, tok) in row[1..].iter().enumerate() {
            let v = value(tok, i + 1, j + 1)?;
            match layout {
                Layout::Square => full[i][j] = v,
                Layout::Lower | Layout::LowerDiagonal => {
                    full[j][i] = v.clone();
                    full[i][j] = v;
                }
            }
        }
    }
    let m = DistanceMatrix::from_square(&full).map_err(|e| BmeError::parse(0, e.to_string()))?;
    m.with_names(names).map_err(|e| BmeError::parse(0, e.to_string()))
}

enum Layout {
    Square,
    Lower,
    LowerDiagonal,
}

/// CSV with a header row of taxon names. Data rows may start with the
/// taxon name when the header's first cell is empty.
pub fn parse_csv(text: &str) -> Result<DistanceMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| BmeError::parse(0, "empty input"))?
        .split(',')
        .map(str::trim)
        .collect();
    let labelled = header.first().is_some_and(|h| h.is_empty());
    let names: Vec<String> = header.iter().skip(usize::from(labelled)).map(|s| s.to_string()).collect();
    let n = names.len();
    let mut full = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let values = &cells[usize::from(labelled)..];
        if values.len() != n {
            return Err(BmeError::parse(
                0,
                format!("row {} has {} values, expected {n}", i + 1, values.len()),
            ));
        }
        if labelled && cells[0] != names[i.min(n - 1)] {
            return Err(BmeError::parse(0, format!("row {} is labelled {:?}", i + 1, cells[0])));
        }
        full.push(
            values
                .iter()
                .enumerate()
                .map(|(j, t)| value(t, i + 1, j + 1))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    if full.len() != n {
        return Err(BmeError::parse(0, format!("expected {n} rows, found {}", full.len())));
    }
    let m = DistanceMatrix::from_square(&full).map_err(|e| BmeError::parse(0, e.to_string()))?;
    m.with_names(names).map_err(|e| BmeError::parse(0, e.to_string()))
}

/// CSV when the first line contains a comma, PHYLIP otherwise.
pub fn parse_matrix(text: &str) -> Result<DistanceMatrix> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.contains(',') {
        parse_csv(text)
    } else {
        parse_phylip(text)
    }
}

/// Matrix with every off-diagonal entry equal to `v`.
pub fn constant_matrix(n: usize, v: BigRational) -> DistanceMatrix {
    let entries = CoordVector::new(n, vec![v; pair_count(n)]).expect("length matches");
    DistanceMatrix::new(entries).expect("nonnegative")
}
